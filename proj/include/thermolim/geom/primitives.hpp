#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>

#include "vec3.hpp"

namespace thermolim
{
using Triangle = std::array<Vec3, 3>;
using Segment = std::array<Vec3, 2>;

//! Closest point to p on triangle abc (Ericson, Real-Time Collision
//! Detection, 5.1.5).
inline Vec3 closest_point_on_triangle(Vec3 const& p, Triangle const& t)
{
    auto const& [a, b, c] = t;
    Vec3 ab = b - a;
    Vec3 ac = c - a;
    Vec3 ap = p - a;
    double d1 = dot(ab, ap);
    double d2 = dot(ac, ap);
    if (d1 <= 0 && d2 <= 0)
    {
        return a;
    }
    Vec3 bp = p - b;
    double d3 = dot(ab, bp);
    double d4 = dot(ac, bp);
    if (d3 >= 0 && d4 <= d3)
    {
        return b;
    }
    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0)
    {
        return a + ab * (d1 / (d1 - d3));
    }
    Vec3 cp = p - c;
    double d5 = dot(ab, cp);
    double d6 = dot(ac, cp);
    if (d6 >= 0 && d5 <= d6)
    {
        return c;
    }
    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0)
    {
        return a + ac * (d2 / (d2 - d6));
    }
    double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

inline double point_triangle_distance(Vec3 const& p, Triangle const& t)
{
    return norm(p - closest_point_on_triangle(p, t));
}

inline double point_segment_distance(Vec3 const& p, Segment const& s)
{
    Vec3 d = s[1] - s[0];
    double len2 = dot(d, d);
    double u = len2 > 0 ? std::clamp(dot(p - s[0], d) / len2, 0.0, 1.0) : 0.0;
    return norm(p - (s[0] + d * u));
}

//! Minimum distance between two closed segments (Ericson 5.1.9).
inline double segment_segment_distance(Segment const& s1, Segment const& s2)
{
    Vec3 d1 = s1[1] - s1[0];
    Vec3 d2 = s2[1] - s2[0];
    Vec3 r = s1[0] - s2[0];
    double a = dot(d1, d1);
    double e = dot(d2, d2);
    double f = dot(d2, r);
    double s = 0;
    double t = 0;
    constexpr double eps = 1e-300;
    if (a <= eps && e <= eps)
    {
        return norm(r);
    }
    if (a <= eps)
    {
        t = std::clamp(f / e, 0.0, 1.0);
    }
    else
    {
        double c = dot(d1, r);
        if (e <= eps)
        {
            s = std::clamp(-c / a, 0.0, 1.0);
        }
        else
        {
            double b = dot(d1, d2);
            double denom = a * e - b * b;
            s = denom > 0 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
            t = (b * s + f) / e;
            if (t < 0)
            {
                t = 0;
                s = std::clamp(-c / a, 0.0, 1.0);
            }
            else if (t > 1)
            {
                t = 1;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    return norm((s1[0] + d1 * s) - (s2[0] + d2 * t));
}

//---------------------------------------------------------------------------//
/*!
 * Convex polyhedron described by vertices, face normals and edges, as used
 * by the separating-axis test.
 */
struct ConvexHullView
{
    std::span<Vec3 const> vertices;
    std::span<Vec3 const> face_normals;
    std::span<Segment const> edges;
};

namespace detail
{
inline void project(std::span<Vec3 const> pts, Vec3 const& axis, double& lo,
                    double& hi)
{
    lo = hi = dot(pts[0], axis);
    for (auto const& p : pts.subspan(1))
    {
        double v = dot(p, axis);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
}

inline bool separated_along(ConvexHullView const& a, ConvexHullView const& b,
                            Vec3 const& axis, double tol)
{
    double n = norm(axis);
    if (n < 1e-12)
    {
        return false;
    }
    Vec3 u = axis / n;
    double alo, ahi, blo, bhi;
    project(a.vertices, u, alo, ahi);
    project(b.vertices, u, blo, bhi);
    return ahi <= blo + tol || bhi <= alo + tol;
}
}  // namespace detail

/*!
 * Whether two convex polyhedra have intersecting interiors.
 *
 * Projections that overlap by no more than `tol` count as separated, so
 * polyhedra that only share a face, edge or vertex do not intersect.
 */
inline bool interiors_intersect(ConvexHullView const& a,
                                ConvexHullView const& b, double tol = 1e-12)
{
    for (auto const& n : a.face_normals)
    {
        if (detail::separated_along(a, b, n, tol))
        {
            return false;
        }
    }
    for (auto const& n : b.face_normals)
    {
        if (detail::separated_along(a, b, n, tol))
        {
            return false;
        }
    }
    for (auto const& ea : a.edges)
    {
        for (auto const& eb : b.edges)
        {
            Vec3 axis = cross(ea[1] - ea[0], eb[1] - eb[0]);
            if (detail::separated_along(a, b, axis, tol))
            {
                return false;
            }
        }
    }
    return true;
}

}  // namespace thermolim
