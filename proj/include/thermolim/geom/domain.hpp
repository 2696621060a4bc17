#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "../core/error.hpp"
#include "polytope.hpp"
#include "primitives.hpp"
#include "vec3.hpp"

namespace thermolim
{
enum class DomainKind
{
    empty,
    ball,
    box,
    convex_polytope,
    lshape,
    tile_union,
    intersection,
    moved,
};

inline char const* to_cstring(DomainKind k)
{
    switch (k)
    {
        case DomainKind::empty: return "empty";
        case DomainKind::ball: return "ball";
        case DomainKind::box: return "box";
        case DomainKind::convex_polytope: return "convex_polytope";
        case DomainKind::lshape: return "lshape";
        case DomainKind::tile_union: return "tile_union";
        case DomainKind::intersection: return "intersection";
        case DomainKind::moved: return "moved";
    }
    return "unknown";
}

class Shape;

//! Distance from x to the boundary of `shape`, estimated by bisection along
//! fixed directions. Never smaller than the true distance (up to the
//! bisection resolution) when the boundary is found; infinity otherwise.
double probe_boundary_distance(Shape const& shape, Vec3 const& x, double max_r);

//---------------------------------------------------------------------------//
/*!
 * Bounded open region of space.
 *
 * Implementations must return `false` from `contains` outside `bbox`. The
 * optional capabilities (exact volume, exact boundary distance, uniform
 * interior map, certified containment) let estimators take exact paths.
 */
class Shape
{
  public:
    virtual ~Shape() = default;

    virtual DomainKind kind() const = 0;
    virtual std::string describe() const = 0;
    virtual bool contains(Vec3 const& x) const = 0;
    virtual Box bbox() const = 0;

    virtual std::optional<double> exact_volume() const { return std::nullopt; }
    virtual std::optional<double> exact_diameter() const { return std::nullopt; }
    virtual bool convex() const { return false; }

    virtual bool has_exact_distance() const { return false; }

    //! Unsigned distance to the boundary.
    virtual double boundary_distance(Vec3 const& x) const
    {
        return probe_boundary_distance(*this, x, bbox().diagonal());
    }

    //! Whether d(x, boundary) <= s.
    virtual bool near_boundary(Vec3 const& x, double s) const
    {
        if (has_exact_distance())
        {
            return boundary_distance(x) <= s;
        }
        return probe_boundary_distance(*this, x, s * (1 + 1e-9)) <= s;
    }

    //! Uniform interior map from [0,1)^3; requires exact volume.
    virtual bool has_uniform_map() const { return false; }
    virtual Vec3 map_uniform(Vec3 const&) const
    {
        throw Error("shape has no uniform interior map");
    }

    /*!
     * Certified test that the convex hull of `vertices` lies in the domain
     * with boundary distance strictly greater than `delta`. Empty when the
     * shape cannot certify.
     */
    virtual std::optional<bool>
    certify_inside(std::span<Vec3 const>, double) const
    {
        return std::nullopt;
    }
};

//---------------------------------------------------------------------------//
class EmptyShape final : public Shape
{
  public:
    DomainKind kind() const override { return DomainKind::empty; }
    std::string describe() const override { return "empty"; }
    bool contains(Vec3 const&) const override { return false; }
    Box bbox() const override { return {}; }
    std::optional<double> exact_volume() const override { return 0.0; }
    std::optional<double> exact_diameter() const override { return 0.0; }
    std::optional<bool>
    certify_inside(std::span<Vec3 const>, double) const override
    {
        return false;
    }
};

class BallShape final : public Shape
{
  public:
    BallShape(Vec3 center, double radius) : center_(center), radius_(radius)
    {
        expect(radius > 0 && std::isfinite(radius), "ball radius must be positive");
        expect(is_finite(center), "ball center must be finite");
    }

    Vec3 const& center() const { return center_; }
    double radius() const { return radius_; }

    DomainKind kind() const override { return DomainKind::ball; }
    std::string describe() const override
    {
        std::ostringstream os;
        os << "ball(r=" << radius_ << ",c=" << center_ << ")";
        return os.str();
    }
    bool contains(Vec3 const& x) const override
    {
        Vec3 d = x - center_;
        return dot(d, d) < radius_ * radius_;
    }
    Box bbox() const override { return Box::cube(center_, radius_); }
    std::optional<double> exact_volume() const override
    {
        return 4.0 / 3.0 * std::numbers::pi * radius_ * radius_ * radius_;
    }
    std::optional<double> exact_diameter() const override { return 2 * radius_; }
    bool convex() const override { return true; }
    bool has_exact_distance() const override { return true; }
    double boundary_distance(Vec3 const& x) const override
    {
        return std::abs(norm(x - center_) - radius_);
    }
    bool has_uniform_map() const override { return true; }
    Vec3 map_uniform(Vec3 const& u) const override
    {
        double r = radius_ * std::cbrt(u.x);
        double cos_t = 1 - 2 * u.y;
        double sin_t = std::sqrt(std::max(0.0, 1 - cos_t * cos_t));
        double phi = 2 * std::numbers::pi * u.z;
        return center_
               + Vec3{sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t} * r;
    }
    std::optional<bool>
    certify_inside(std::span<Vec3 const> vertices, double delta) const override
    {
        double limit = radius_ - delta;
        for (auto const& v : vertices)
        {
            if (!(norm(v - center_) < limit))
            {
                return false;
            }
        }
        return true;
    }

  private:
    Vec3 center_;
    double radius_;
};

class BoxShape final : public Shape
{
  public:
    explicit BoxShape(Box box) : box_(box)
    {
        expect(!box.degenerate(), "box must have positive extent");
    }

    Box const& box() const { return box_; }

    DomainKind kind() const override { return DomainKind::box; }
    std::string describe() const override
    {
        std::ostringstream os;
        os << "box(" << box_.lo << "," << box_.hi << ")";
        return os.str();
    }
    bool contains(Vec3 const& x) const override
    {
        return x.x > box_.lo.x && x.x < box_.hi.x && x.y > box_.lo.y
               && x.y < box_.hi.y && x.z > box_.lo.z && x.z < box_.hi.z;
    }
    Box bbox() const override { return box_; }
    std::optional<double> exact_volume() const override { return box_.volume(); }
    std::optional<double> exact_diameter() const override
    {
        return box_.diagonal();
    }
    bool convex() const override { return true; }
    bool has_exact_distance() const override { return true; }
    double boundary_distance(Vec3 const& x) const override
    {
        return std::abs(box_.signed_distance(x));
    }
    bool has_uniform_map() const override { return true; }
    Vec3 map_uniform(Vec3 const& u) const override { return box_.at(u); }
    std::optional<bool>
    certify_inside(std::span<Vec3 const> vertices, double delta) const override
    {
        for (auto const& v : vertices)
        {
            if (!(box_.signed_distance(v) < -delta))
            {
                return false;
            }
        }
        return true;
    }

  private:
    Box box_;
};

class PolytopeShape final : public Shape
{
  public:
    explicit PolytopeShape(Polytope p) : poly_(std::move(p)) {}

    Polytope const& polytope() const { return poly_; }

    DomainKind kind() const override { return DomainKind::convex_polytope; }
    std::string describe() const override
    {
        std::ostringstream os;
        os << "polytope(faces=" << poly_.halfspaces().size()
           << ",vertices=" << poly_.vertices().size() << ")";
        return os.str();
    }
    bool contains(Vec3 const& x) const override { return poly_.contains(x); }
    Box bbox() const override { return poly_.bbox(); }
    std::optional<double> exact_volume() const override
    {
        return poly_.exact_volume();
    }
    std::optional<double> exact_diameter() const override
    {
        return poly_.diameter();
    }
    bool convex() const override { return true; }
    bool has_exact_distance() const override { return true; }
    double boundary_distance(Vec3 const& x) const override
    {
        return poly_.boundary_distance(x);
    }
    bool near_boundary(Vec3 const& x, double s) const override
    {
        double inside = poly_.max_excess(x);
        if (inside <= 0)
        {
            return -inside <= s;
        }
        if (inside > s)
        {
            return false;
        }
        return poly_.boundary_distance(x) <= s;
    }
    bool has_uniform_map() const override { return true; }
    Vec3 map_uniform(Vec3 const& u) const override { return poly_.map_uniform(u); }
    std::optional<bool>
    certify_inside(std::span<Vec3 const> vertices, double delta) const override
    {
        for (auto const& v : vertices)
        {
            if (!(poly_.max_excess(v) < -delta))
            {
                return false;
            }
        }
        return true;
    }

  private:
    Polytope poly_;
};

//! Distance between the convex hull of a tetrahedron and a closed box.
inline double tetrahedron_box_distance(std::span<Vec3 const> tet, Box const& box)
{
    Polytope t = Polytope::hull(tet);
    Polytope b = Polytope::box(box);
    if (interiors_intersect(t.view(), b.view(), -1e-12))
    {
        return 0.0;
    }
    double best = std::numeric_limits<double>::infinity();
    for (auto const& v : t.vertices())
    {
        best = std::min(best, box.distance(v));
    }
    for (auto const& c : b.vertices())
    {
        best = std::min(best, std::max(0.0, t.signed_distance(c)));
    }
    for (auto const& e1 : t.edges())
    {
        for (auto const& e2 : b.edges())
        {
            best = std::min(best, segment_segment_distance(e1, e2));
        }
    }
    return best;
}

/*!
 * Box with a corner box removed: outer \ notch, where the notch shares the
 * outer box's upper corner.
 *
 * The closure splits into three disjoint boxes, which give exact exterior
 * distances and a uniform interior map.
 */
class LShapeShape final : public Shape
{
  public:
    LShapeShape(Box outer, Box notch) : outer_(outer), notch_(notch)
    {
        expect(!outer.degenerate() && !notch.degenerate(),
               "L-shape boxes must have positive extent");
        for (int i = 0; i < 3; ++i)
        {
            expect(notch.hi[i] == outer.hi[i] && notch.lo[i] > outer.lo[i],
                   "L-shape notch must share the outer upper corner");
        }
        Vec3 m = notch.lo;
        Vec3 lo = outer.lo;
        Vec3 hi = outer.hi;
        pieces_ = {Box{lo, {m.x, hi.y, hi.z}},
                   Box{{m.x, lo.y, lo.z}, {hi.x, m.y, hi.z}},
                   Box{{m.x, m.y, lo.z}, {hi.x, hi.y, m.z}}};
        double acc = 0;
        for (int k = 0; k < 3; ++k)
        {
            acc += pieces_[k].volume();
            cumulative_[k] = acc;
        }
    }

    Box const& outer() const { return outer_; }
    Box const& notch() const { return notch_; }

    DomainKind kind() const override { return DomainKind::lshape; }
    std::string describe() const override
    {
        std::ostringstream os;
        os << "lshape(" << outer_.lo << "," << outer_.hi << " minus "
           << notch_.lo << ")";
        return os.str();
    }
    bool contains(Vec3 const& x) const override
    {
        return outer_.signed_distance(x) < 0 && !notch_.contains(x);
    }
    Box bbox() const override { return outer_; }
    std::optional<double> exact_volume() const override
    {
        return outer_.volume() - notch_.volume();
    }
    std::optional<double> exact_diameter() const override
    {
        return outer_.diagonal();
    }
    bool has_exact_distance() const override { return true; }
    double boundary_distance(Vec3 const& x) const override
    {
        if (contains(x))
        {
            return std::min(-outer_.signed_distance(x), notch_.distance(x));
        }
        double best = std::numeric_limits<double>::infinity();
        for (auto const& p : pieces_)
        {
            best = std::min(best, p.distance(x));
        }
        return best;
    }
    bool has_uniform_map() const override { return true; }
    Vec3 map_uniform(Vec3 const& u) const override
    {
        double target = u.x * cumulative_[2];
        int k = target < cumulative_[0] ? 0 : (target < cumulative_[1] ? 1 : 2);
        double lo = k == 0 ? 0.0 : cumulative_[k - 1];
        Vec3 v{(target - lo) / pieces_[k].volume(), u.y, u.z};
        v.x = std::clamp(v.x, 0.0, 1.0);
        return pieces_[k].at(v);
    }
    std::optional<bool>
    certify_inside(std::span<Vec3 const> vertices, double delta) const override
    {
        for (auto const& v : vertices)
        {
            if (!(outer_.signed_distance(v) < -delta))
            {
                return false;
            }
        }
        if (vertices.size() != 4)
        {
            return std::nullopt;
        }
        return tetrahedron_box_distance(vertices, notch_) > delta;
    }

  private:
    Box outer_;
    Box notch_;
    std::array<Box, 3> pieces_;
    std::array<double, 3> cumulative_{};
};

class IntersectionShape final : public Shape
{
  public:
    IntersectionShape(std::shared_ptr<Shape const> a, std::shared_ptr<Shape const> b)
        : a_(std::move(a)), b_(std::move(b)), box_(intersect(a_->bbox(), b_->bbox()))
    {
    }

    std::shared_ptr<Shape const> const& first() const { return a_; }
    std::shared_ptr<Shape const> const& second() const { return b_; }

    DomainKind kind() const override { return DomainKind::intersection; }
    std::string describe() const override
    {
        return "(" + a_->describe() + " & " + b_->describe() + ")";
    }
    bool contains(Vec3 const& x) const override
    {
        return box_.contains(x) && a_->contains(x) && b_->contains(x);
    }
    Box bbox() const override { return box_; }
    //! Exact inside (distance to the complement is the smaller of the two).
    double boundary_distance(Vec3 const& x) const override
    {
        if (exact_inside(x))
        {
            return std::min(a_->boundary_distance(x), b_->boundary_distance(x));
        }
        return Shape::boundary_distance(x);
    }
    bool near_boundary(Vec3 const& x, double s) const override
    {
        if (exact_inside(x))
        {
            return a_->near_boundary(x, s) || b_->near_boundary(x, s);
        }
        return Shape::near_boundary(x, s);
    }
    std::optional<double> exact_volume() const override
    {
        if (box_.degenerate())
        {
            return 0.0;
        }
        return std::nullopt;
    }

  private:
    std::shared_ptr<Shape const> a_;
    std::shared_ptr<Shape const> b_;
    Box box_;

    bool exact_inside(Vec3 const& x) const
    {
        return a_->has_exact_distance() && b_->has_exact_distance() && contains(x);
    }
};

//---------------------------------------------------------------------------//
/*!
 * Immutable handle to a bounded open region.
 *
 * Copies share the underlying shape.
 */
class Domain
{
  public:
    Domain() : shape_(std::make_shared<EmptyShape>()) {}
    explicit Domain(std::shared_ptr<Shape const> shape) : shape_(std::move(shape))
    {
        expect(shape_ != nullptr, "null shape");
    }

    static Domain empty() { return Domain(); }
    static Domain ball(Vec3 center, double radius)
    {
        return Domain(std::make_shared<BallShape>(center, radius));
    }
    static Domain box(Box b) { return Domain(std::make_shared<BoxShape>(b)); }
    //! Axis-aligned cube of the given side centered at `center`.
    static Domain cube(Vec3 center, double side)
    {
        return box(Box::cube(center, side / 2));
    }
    static Domain polytope(Polytope p)
    {
        return Domain(std::make_shared<PolytopeShape>(std::move(p)));
    }
    static Domain lshape(Box outer, Box notch)
    {
        return Domain(std::make_shared<LShapeShape>(outer, notch));
    }
    //! [0, 2s]^3 minus [s, 2s]^3.
    static Domain lshape(double s)
    {
        return lshape(Box{{0, 0, 0}, {2 * s, 2 * s, 2 * s}},
                      Box{{s, s, s}, {2 * s, 2 * s, 2 * s}});
    }
    static Domain intersection(Domain const& a, Domain const& b)
    {
        if (a.is_empty() || b.is_empty())
        {
            return empty();
        }
        return Domain(std::make_shared<IntersectionShape>(a.shape_, b.shape_));
    }

    DomainKind kind() const { return shape_->kind(); }
    std::string describe() const { return shape_->describe(); }
    bool contains(Vec3 const& x) const { return shape_->contains(x); }
    Box bbox() const { return shape_->bbox(); }
    std::optional<double> volume_hint() const { return shape_->exact_volume(); }
    std::optional<double> diameter_hint() const { return shape_->exact_diameter(); }
    bool convex() const { return shape_->convex(); }
    bool has_exact_distance() const { return shape_->has_exact_distance(); }
    double boundary_distance(Vec3 const& x) const
    {
        return shape_->boundary_distance(x);
    }
    bool near_boundary(Vec3 const& x, double s) const
    {
        return shape_->near_boundary(x, s);
    }
    bool has_uniform_map() const { return shape_->has_uniform_map(); }
    Vec3 map_uniform(Vec3 const& u) const { return shape_->map_uniform(u); }

    //! Empty kind or a bounding box of zero extent.
    bool is_empty() const
    {
        return kind() == DomainKind::empty || bbox().degenerate();
    }

    Shape const& shape() const { return *shape_; }
    std::shared_ptr<Shape const> const& shape_ptr() const { return shape_; }

    template<class T>
    T const* as() const
    {
        return dynamic_cast<T const*>(shape_.get());
    }

    //! Same underlying shape object.
    bool same_as(Domain const& other) const { return shape_ == other.shape_; }

  private:
    std::shared_ptr<Shape const> shape_;
};

//---------------------------------------------------------------------------//
namespace detail
{
//! Probe directions: coordinate axes, cube diagonals, then a Fibonacci sphere.
inline std::vector<Vec3> const& probe_directions()
{
    static std::vector<Vec3> const dirs = [] {
        std::vector<Vec3> d;
        for (int i = 0; i < 3; ++i)
        {
            Vec3 e;
            e[i] = 1;
            d.push_back(e);
            d.push_back(-e);
        }
        for (int k = 0; k < 8; ++k)
        {
            d.push_back(normalized({(k & 1) ? 1.0 : -1.0,
                                    (k & 2) ? 1.0 : -1.0,
                                    (k & 4) ? 1.0 : -1.0}));
        }
        constexpr int n = 128;
        double golden = std::numbers::pi * (3 - std::sqrt(5.0));
        for (int i = 0; i < n; ++i)
        {
            double z = 1 - (2 * i + 1) / static_cast<double>(n);
            double r = std::sqrt(1 - z * z);
            double phi = golden * i;
            d.push_back({r * std::cos(phi), r * std::sin(phi), z});
        }
        return d;
    }();
    return dirs;
}
}  // namespace detail

inline double probe_boundary_distance(Shape const& shape, Vec3 const& x, double max_r)
{
    constexpr int kSteps = 32;
    constexpr int kBisect = 40;
    bool inside = shape.contains(x);
    double best = std::numeric_limits<double>::infinity();
    if (!(max_r > 0))
    {
        return best;
    }
    for (auto const& d : detail::probe_directions())
    {
        double prev = 0;
        for (int k = 1; k <= kSteps; ++k)
        {
            double r = max_r * k / kSteps;
            if (r >= best)
            {
                break;
            }
            if (shape.contains(x + d * r) != inside)
            {
                double lo = prev;
                double hi = r;
                for (int it = 0; it < kBisect; ++it)
                {
                    double mid = 0.5 * (lo + hi);
                    (shape.contains(x + d * mid) != inside ? hi : lo) = mid;
                }
                best = std::min(best, hi);
                break;
            }
            prev = r;
        }
    }
    return best;
}

}  // namespace thermolim
