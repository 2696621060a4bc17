#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>

namespace thermolim
{
//---------------------------------------------------------------------------//
struct Vec3
{
    double x{0};
    double y{0};
    double z{0};

    constexpr double operator[](int i) const
    {
        return i == 0 ? x : (i == 1 ? y : z);
    }
    constexpr double& operator[](int i)
    {
        return i == 0 ? x : (i == 1 ? y : z);
    }

    constexpr Vec3& operator+=(Vec3 const& o)
    {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr Vec3& operator-=(Vec3 const& o)
    {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
    constexpr Vec3& operator*=(double s)
    {
        x *= s;
        y *= s;
        z *= s;
        return *this;
    }

    friend constexpr bool operator==(Vec3 const&, Vec3 const&) = default;
};

constexpr Vec3 operator+(Vec3 a, Vec3 const& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, Vec3 const& b) { return a -= b; }
constexpr Vec3 operator-(Vec3 const& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator/(Vec3 const& a, double s)
{
    return {a.x / s, a.y / s, a.z / s};
}

constexpr double dot(Vec3 const& a, Vec3 const& b)
{
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

constexpr Vec3 cross(Vec3 const& a, Vec3 const& b)
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(Vec3 const& a) { return std::sqrt(dot(a, a)); }

inline Vec3 normalized(Vec3 const& a) { return a / norm(a); }

inline bool is_finite(Vec3 const& a)
{
    return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

inline std::ostream& operator<<(std::ostream& os, Vec3 const& v)
{
    return os << '(' << v.x << ',' << v.y << ',' << v.z << ')';
}

//! Scalar triple product a . (b x c).
constexpr double triple(Vec3 const& a, Vec3 const& b, Vec3 const& c)
{
    return dot(a, cross(b, c));
}

//---------------------------------------------------------------------------//
//! Row-major 3x3 matrix.
struct Mat3
{
    std::array<std::array<double, 3>, 3> m{};

    static constexpr Mat3 identity()
    {
        Mat3 r;
        r.m[0][0] = r.m[1][1] = r.m[2][2] = 1;
        return r;
    }

    constexpr Vec3 operator*(Vec3 const& v) const
    {
        return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }

    constexpr Mat3 operator*(Mat3 const& o) const
    {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
        {
            for (int j = 0; j < 3; ++j)
            {
                double s = 0;
                for (int k = 0; k < 3; ++k)
                {
                    s += m[i][k] * o.m[k][j];
                }
                r.m[i][j] = s;
            }
        }
        return r;
    }

    constexpr Mat3 transposed() const
    {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
        {
            for (int j = 0; j < 3; ++j)
            {
                r.m[i][j] = m[j][i];
            }
        }
        return r;
    }

    constexpr double det() const
    {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
               - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
               + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }

    constexpr Vec3 column(int j) const { return {m[0][j], m[1][j], m[2][j]}; }

    friend constexpr bool operator==(Mat3 const&, Mat3 const&) = default;
};

//---------------------------------------------------------------------------//
//! Axis-aligned box [lo, hi]; empty when any extent is nonpositive.
struct Box
{
    Vec3 lo;
    Vec3 hi;

    static Box empty_box()
    {
        constexpr double inf = std::numeric_limits<double>::infinity();
        return {{inf, inf, inf}, {-inf, -inf, -inf}};
    }

    static Box cube(Vec3 const& center, double half)
    {
        Vec3 h{half, half, half};
        return {center - h, center + h};
    }

    Vec3 extent() const { return hi - lo; }
    Vec3 center() const { return (lo + hi) * 0.5; }

    bool degenerate() const
    {
        return !(hi.x > lo.x && hi.y > lo.y && hi.z > lo.z);
    }

    double volume() const
    {
        if (degenerate())
        {
            return 0.0;
        }
        auto e = extent();
        return e.x * e.y * e.z;
    }

    double diagonal() const { return degenerate() ? 0.0 : norm(extent()); }

    bool contains(Vec3 const& p) const
    {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y
               && p.z >= lo.z && p.z <= hi.z;
    }

    Box inflated(double s) const
    {
        Vec3 d{s, s, s};
        return {lo - d, hi + d};
    }

    void expand(Vec3 const& p)
    {
        for (int i = 0; i < 3; ++i)
        {
            lo[i] = std::min(lo[i], p[i]);
            hi[i] = std::max(hi[i], p[i]);
        }
    }

    std::array<Vec3, 8> corners() const
    {
        std::array<Vec3, 8> c;
        for (int k = 0; k < 8; ++k)
        {
            c[k] = {(k & 1) ? hi.x : lo.x,
                    (k & 2) ? hi.y : lo.y,
                    (k & 4) ? hi.z : lo.z};
        }
        return c;
    }

    //! Point at fractional coordinates u in [0,1)^3.
    Vec3 at(Vec3 const& u) const
    {
        auto e = extent();
        return {lo.x + u.x * e.x, lo.y + u.y * e.y, lo.z + u.z * e.z};
    }

    //! Euclidean distance from p to the closed box (zero inside).
    double distance(Vec3 const& p) const
    {
        double s = 0;
        for (int i = 0; i < 3; ++i)
        {
            double d = std::max({lo[i] - p[i], 0.0, p[i] - hi[i]});
            s += d * d;
        }
        return std::sqrt(s);
    }

    //! Signed distance: negative inside (distance to nearest face).
    double signed_distance(Vec3 const& p) const
    {
        double outside = distance(p);
        if (outside > 0)
        {
            return outside;
        }
        double inside = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 3; ++i)
        {
            inside = std::min({inside, p[i] - lo[i], hi[i] - p[i]});
        }
        return -inside;
    }
};

inline Box intersect(Box const& a, Box const& b)
{
    Box r;
    for (int i = 0; i < 3; ++i)
    {
        r.lo[i] = std::max(a.lo[i], b.lo[i]);
        r.hi[i] = std::min(a.hi[i], b.hi[i]);
    }
    return r;
}

}  // namespace thermolim
