#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "core/error.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"
#include "geom/domain.hpp"
#include "geom/measure.hpp"
#include "geom/polytope.hpp"
#include "geom/vec3.hpp"

namespace thermolim
{
//---------------------------------------------------------------------------//
//! Proper rotation stored as a unit quaternion (w, x, y, z).
class Rotation
{
  public:
    Rotation() = default;

    //! Normalizes the input; throws on a zero quaternion.
    Rotation(double w, double x, double y, double z)
    {
        double n = std::sqrt(w * w + x * x + y * y + z * z);
        expect(n > 0 && std::isfinite(n), "rotation quaternion must be nonzero");
        q_ = {w / n, x / n, y / n, z / n};
    }

    static Rotation identity() { return {}; }

    //! Rotation by `angle` about `axis`.
    static Rotation axis_angle(Vec3 const& axis, double angle)
    {
        Vec3 a = normalized(axis) * std::sin(angle / 2);
        return {std::cos(angle / 2), a.x, a.y, a.z};
    }

    //! From an orthonormal matrix with determinant +1.
    static Rotation from_matrix(Mat3 const& m)
    {
        auto const& r = m.m;
        double tr = r[0][0] + r[1][1] + r[2][2];
        if (tr > 0)
        {
            double s = 2 * std::sqrt(tr + 1);
            return {s / 4, (r[2][1] - r[1][2]) / s, (r[0][2] - r[2][0]) / s,
                    (r[1][0] - r[0][1]) / s};
        }
        if (r[0][0] > r[1][1] && r[0][0] > r[2][2])
        {
            double s = 2 * std::sqrt(1 + r[0][0] - r[1][1] - r[2][2]);
            return {(r[2][1] - r[1][2]) / s, s / 4, (r[0][1] + r[1][0]) / s,
                    (r[0][2] + r[2][0]) / s};
        }
        if (r[1][1] > r[2][2])
        {
            double s = 2 * std::sqrt(1 + r[1][1] - r[0][0] - r[2][2]);
            return {(r[0][2] - r[2][0]) / s, (r[0][1] + r[1][0]) / s, s / 4,
                    (r[1][2] + r[2][1]) / s};
        }
        double s = 2 * std::sqrt(1 + r[2][2] - r[0][0] - r[1][1]);
        return {(r[1][0] - r[0][1]) / s, (r[0][2] + r[2][0]) / s,
                (r[1][2] + r[2][1]) / s, s / 4};
    }

    std::array<double, 4> const& quaternion() const { return q_; }

    Mat3 matrix() const
    {
        auto [w, x, y, z] = q_;
        Mat3 r;
        r.m = {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
                {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
                {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
        return r;
    }

    //! Rotation angle in [0, pi].
    double angle() const { return 2 * std::acos(std::min(1.0, std::abs(q_[0]))); }

    Rotation inverse() const { return raw(q_[0], -q_[1], -q_[2], -q_[3]); }

    //! Composition: (a * b) rotates by b first, then a.
    friend Rotation operator*(Rotation const& a, Rotation const& b)
    {
        auto [w1, x1, y1, z1] = a.q_;
        auto [w2, x2, y2, z2] = b.q_;
        return Rotation(w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
                        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
                        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
                        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2);
    }

    Vec3 operator*(Vec3 const& v) const { return matrix() * v; }

  private:
    std::array<double, 4> q_{1, 0, 0, 0};

    static Rotation raw(double w, double x, double y, double z)
    {
        Rotation r;
        r.q_ = {w, x, y, z};
        return r;
    }
};

//! Haar-uniform rotation from three uniforms (Shoemake), folded to w >= 0.
inline Rotation rotation_from_uniforms(double u1, double u2, double u3)
{
    double a = std::sqrt(1 - u1);
    double b = std::sqrt(u1);
    double t1 = 2 * std::numbers::pi * u2;
    double t2 = 2 * std::numbers::pi * u3;
    double w = b * std::cos(t2);
    double x = a * std::sin(t1);
    double y = a * std::cos(t1);
    double z = b * std::sin(t2);
    if (w < 0)
    {
        w = -w;
        x = -x;
        y = -y;
        z = -z;
    }
    return {w, x, y, z};
}

inline Rotation sample_rotation(CounterRng& rng)
{
    double u1 = rng.uniform();
    double u2 = rng.uniform();
    double u3 = rng.uniform();
    return rotation_from_uniforms(u1, u2, u3);
}

//! Haar-uniform rotation, deterministic in (seed, index).
inline Rotation sample_rotation(std::uint64_t seed, std::uint64_t index)
{
    CounterRng rng(seed, Stream::rotation, index);
    return sample_rotation(rng);
}

//---------------------------------------------------------------------------//
//! Orientation-preserving isometry x -> R x + u.
class RigidMotion
{
  public:
    RigidMotion() = default;
    RigidMotion(Rotation rot, Vec3 trans)
        : rot_(rot), mat_(rot.matrix()), trans_(trans)
    {
        expect(is_finite(trans), "translation must be finite");
    }

    static RigidMotion identity() { return {}; }
    static RigidMotion translation(Vec3 u) { return {Rotation{}, u}; }

    Rotation const& rotation() const { return rot_; }
    Mat3 const& matrix() const { return mat_; }
    Vec3 const& translation() const { return trans_; }

    //! R (scale x) + u.
    Vec3 apply(Vec3 const& x, double scale = 1.0) const
    {
        return mat_ * (x * scale) + trans_;
    }

    //! Preimage of y under apply(., scale).
    Vec3 pullback(Vec3 const& y, double scale = 1.0) const
    {
        return (mat_.transposed() * (y - trans_)) / scale;
    }

    RigidMotion inverse() const
    {
        Rotation ri = rot_.inverse();
        return {ri, -(ri.matrix() * trans_)};
    }

    //! (g * h) x = g (h x).
    friend RigidMotion operator*(RigidMotion const& g, RigidMotion const& h)
    {
        return {g.rot_ * h.rot_, g.mat_ * h.trans_ + g.trans_};
    }

  private:
    Rotation rot_;
    Mat3 mat_ = Mat3::identity();
    Vec3 trans_;
};

inline Polytope apply(RigidMotion const& g, double scale, Polytope const& p)
{
    expect(scale > 0, "scale must be positive");
    return p.transformed(g.matrix(), scale, g.translation());
}

//---------------------------------------------------------------------------//
//! Image of a shape under x -> R (scale x) + u.
class MovedShape final : public Shape
{
  public:
    MovedShape(std::shared_ptr<Shape const> base, RigidMotion g, double scale)
        : base_(std::move(base)), g_(g), scale_(scale)
    {
        expect(scale > 0, "scale must be positive");
        box_ = Box::empty_box();
        for (auto const& c : base_->bbox().corners())
        {
            box_.expand(g_.apply(c, scale_));
        }
    }

    Shape const& base() const { return *base_; }
    RigidMotion const& motion() const { return g_; }
    double scale() const { return scale_; }

    DomainKind kind() const override { return DomainKind::moved; }
    std::string describe() const override
    {
        std::ostringstream os;
        os << "moved(" << base_->describe() << ",scale=" << scale_
           << ",u=" << g_.translation() << ")";
        return os.str();
    }
    bool contains(Vec3 const& x) const override
    {
        return box_.contains(x) && base_->contains(g_.pullback(x, scale_));
    }
    Box bbox() const override { return box_; }
    std::optional<double> exact_volume() const override
    {
        if (auto v = base_->exact_volume())
        {
            return *v * scale_ * scale_ * scale_;
        }
        return std::nullopt;
    }
    std::optional<double> exact_diameter() const override
    {
        if (auto d = base_->exact_diameter())
        {
            return *d * scale_;
        }
        return std::nullopt;
    }
    bool convex() const override { return base_->convex(); }
    bool has_exact_distance() const override { return base_->has_exact_distance(); }
    double boundary_distance(Vec3 const& x) const override
    {
        return scale_ * base_->boundary_distance(g_.pullback(x, scale_));
    }
    bool near_boundary(Vec3 const& x, double s) const override
    {
        return base_->near_boundary(g_.pullback(x, scale_), s / scale_);
    }
    bool has_uniform_map() const override { return base_->has_uniform_map(); }
    Vec3 map_uniform(Vec3 const& u) const override
    {
        return g_.apply(base_->map_uniform(u), scale_);
    }
    std::optional<bool>
    certify_inside(std::span<Vec3 const> vertices, double delta) const override
    {
        std::vector<Vec3> local;
        local.reserve(vertices.size());
        for (auto const& v : vertices)
        {
            local.push_back(g_.pullback(v, scale_));
        }
        return base_->certify_inside(local, delta / scale_);
    }

  private:
    std::shared_ptr<Shape const> base_;
    RigidMotion g_;
    double scale_;
    Box box_;
};

//! Image of a domain under x -> R (scale x) + u, staying exact where possible.
inline Domain apply(RigidMotion const& g, double scale, Domain const& d)
{
    expect(scale > 0, "scale must be positive");
    if (d.is_empty())
    {
        return Domain::empty();
    }
    if (auto const* ball = d.as<BallShape>())
    {
        return Domain::ball(g.apply(ball->center(), scale), scale * ball->radius());
    }
    if (auto const* poly = d.as<PolytopeShape>())
    {
        return Domain::polytope(apply(g, scale, poly->polytope()));
    }
    if (auto const* box = d.as<BoxShape>())
    {
        if (g.matrix() == Mat3::identity())
        {
            Box b = box->box();
            return Domain::box({g.apply(b.lo, scale), g.apply(b.hi, scale)});
        }
        return Domain::polytope(apply(g, scale, Polytope::box(box->box())));
    }
    if (auto const* moved = d.as<MovedShape>())
    {
        RigidMotion inner = moved->motion();
        RigidMotion scaled_inner(inner.rotation(), inner.translation() * scale);
        return Domain(std::make_shared<MovedShape>(
            std::shared_ptr<Shape const>(d.shape_ptr(), &moved->base()),
            g * scaled_inner, scale * moved->scale()));
    }
    return Domain(std::make_shared<MovedShape>(d.shape_ptr(), g, scale));
}

//---------------------------------------------------------------------------//
//! Radius of the origin-centered ball enclosing the domain's bounding box.
inline double circumradius_about_origin(Domain const& d)
{
    if (auto const* ball = d.as<BallShape>())
    {
        return norm(ball->center()) + ball->radius();
    }
    if (auto const* poly = d.as<PolytopeShape>())
    {
        return poly->polytope().circumradius_about_origin();
    }
    double r = 0;
    for (auto const& c : d.bbox().corners())
    {
        r = std::max(r, norm(c));
    }
    return r;
}

/*!
 * Monte Carlo value of the integral over motions g = (u, R) of 1_A(g^{-1} x),
 * with du Lebesgue and dR the probability Haar measure.
 *
 * Translations are drawn from the cube about x of half-extent
 * `half_extent`, which defaults to the enclosing radius of A inflated by 1%.
 */
inline MeasureEstimate
haar_translation_identity(Domain const& a, Vec3 const& x, std::size_t samples,
                          std::uint64_t seed,
                          std::optional<double> half_extent = std::nullopt)
{
    expect(samples >= 1, "samples must be >= 1");
    expect(!a.is_empty(), "empty bounding box");
    double rho = circumradius_about_origin(a);
    double h = half_extent.value_or(1.01 * rho);
    expect(h >= rho, "support not covered");
    Box region = Box::cube(x, h);
    std::size_t hits = sharded_count(samples, [&](std::size_t i) {
        CounterRng rng(seed, Stream::haar_translation, i);
        Vec3 u = region.at(uniform3(rng));
        Rotation r = sample_rotation(rng);
        return a.contains(r.inverse() * (x - u));
    });
    return detail::hit_or_miss(hits, samples, region.volume(), seed);
}

}  // namespace thermolim
