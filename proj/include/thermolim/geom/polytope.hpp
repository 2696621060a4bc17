#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "../core/error.hpp"
#include "primitives.hpp"
#include "vec3.hpp"

namespace thermolim
{
//! Closed half-space { x : normal . x <= offset } with unit normal.
struct Halfspace
{
    Vec3 normal;
    double offset{0};

    double eval(Vec3 const& x) const { return dot(normal, x) - offset; }
};

//---------------------------------------------------------------------------//
/*!
 * Bounded convex solid held both as a half-space list and as its vertex set.
 *
 * Derived data (ordered face polygons, edges, triangulation and a tetrahedral
 * decomposition) is built once at construction; the object is immutable
 * afterwards.
 */
class Polytope
{
  public:
    Polytope() = default;

    //! Build from trusted half-spaces and vertices (every vertex on the
    //! solid, every half-space supporting a face).
    Polytope(std::vector<Halfspace> halfspaces, std::vector<Vec3> vertices)
        : halfspaces_(std::move(halfspaces)), vertices_(std::move(vertices))
    {
        expect(!vertices_.empty() && halfspaces_.size() >= 4,
               "polytope needs at least four faces and one vertex");
        for (auto const& v : vertices_)
        {
            expect(is_finite(v), "polytope vertex is not finite");
        }
        build();
    }

    //! Convex hull of a point cloud (brute force; intended for small sets).
    static Polytope hull(std::span<Vec3 const> points);

    static Polytope box(Box const& b)
    {
        std::vector<Halfspace> hs{{{1, 0, 0}, b.hi.x},
                                  {{-1, 0, 0}, -b.lo.x},
                                  {{0, 1, 0}, b.hi.y},
                                  {{0, -1, 0}, -b.lo.y},
                                  {{0, 0, 1}, b.hi.z},
                                  {{0, 0, -1}, -b.lo.z}};
        auto c = b.corners();
        return Polytope(std::move(hs), std::vector<Vec3>(c.begin(), c.end()));
    }

    //! Image under x -> rot * (scale * x) + shift.
    Polytope transformed(Mat3 const& rot, double scale, Vec3 const& shift) const
    {
        std::vector<Halfspace> hs;
        hs.reserve(halfspaces_.size());
        for (auto const& h : halfspaces_)
        {
            Vec3 n = rot * h.normal;
            hs.push_back({n, scale * h.offset + dot(n, shift)});
        }
        std::vector<Vec3> vs;
        vs.reserve(vertices_.size());
        for (auto const& v : vertices_)
        {
            vs.push_back(rot * (v * scale) + shift);
        }
        return Polytope(std::move(hs), std::move(vs));
    }

    std::vector<Halfspace> const& halfspaces() const { return halfspaces_; }
    std::vector<Vec3> const& vertices() const { return vertices_; }
    std::vector<Segment> const& edges() const { return edges_; }
    std::vector<Triangle> const& triangles() const { return triangles_; }
    std::vector<Vec3> const& face_normals() const { return normals_; }
    double exact_volume() const { return volume_; }
    Vec3 const& centroid() const { return centroid_; }
    Box const& bbox() const { return bbox_; }

    ConvexHullView view() const { return {vertices_, normals_, edges_}; }

    //! Membership in the open solid.
    bool contains(Vec3 const& x) const
    {
        return std::all_of(halfspaces_.begin(),
                           halfspaces_.end(),
                           [&](Halfspace const& h) { return h.eval(x) < 0; });
    }

    //! Membership in the closed solid inflated by `tol`.
    bool contains_closed(Vec3 const& x, double tol = 1e-12) const
    {
        return std::all_of(halfspaces_.begin(),
                           halfspaces_.end(),
                           [&](Halfspace const& h) { return h.eval(x) <= tol; });
    }

    //! Largest face-plane excess; negative exactly on the interior.
    double max_excess(Vec3 const& x) const
    {
        double m = -std::numeric_limits<double>::infinity();
        for (auto const& h : halfspaces_)
        {
            m = std::max(m, h.eval(x));
        }
        return m;
    }

    //! Exact Euclidean distance from x to the boundary.
    double boundary_distance(Vec3 const& x) const
    {
        double inside = max_excess(x);
        if (inside <= 0)
        {
            return -inside;
        }
        double best = std::numeric_limits<double>::infinity();
        for (auto const& h : halfspaces_)
        {
            double e = h.eval(x);
            if (e > 0)
            {
                Vec3 proj = x - h.normal * e;
                if (contains_closed(proj, 1e-12 * (1 + std::abs(h.offset))))
                {
                    best = std::min(best, e);
                }
            }
        }
        for (auto const& s : edges_)
        {
            best = std::min(best, point_segment_distance(x, s));
        }
        return best;
    }

    //! Negative inside, positive outside, zero on the boundary.
    double signed_distance(Vec3 const& x) const
    {
        double inside = max_excess(x);
        return inside <= 0 ? inside : boundary_distance(x);
    }

    //! Radius of the largest ball about the centroid contained in the solid.
    double inradius_at_centroid() const { return -max_excess(centroid_); }

    //! Largest vertex norm (radius of the origin-centered enclosing ball).
    double circumradius_about_origin() const
    {
        double r = 0;
        for (auto const& v : vertices_)
        {
            r = std::max(r, norm(v));
        }
        return r;
    }

    double diameter() const
    {
        double d = 0;
        for (std::size_t i = 0; i < vertices_.size(); ++i)
        {
            for (std::size_t j = i + 1; j < vertices_.size(); ++j)
            {
                d = std::max(d, norm(vertices_[i] - vertices_[j]));
            }
        }
        return d;
    }

    //! Uniform point in the solid from u in [0,1)^3.
    Vec3 map_uniform(Vec3 u) const
    {
        double target = u.x * volume_;
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
        std::size_t k = std::min<std::size_t>(
            static_cast<std::size_t>(it - cumulative_.begin()), tets_.size() - 1);
        double lo = k == 0 ? 0.0 : cumulative_[k - 1];
        double width = cumulative_[k] - lo;
        u.x = width > 0 ? std::clamp((target - lo) / width, 0.0, 1.0) : 0.0;
        return map_to_tetrahedron(tets_[k], u);
    }

    //! Uniform map from the unit cube onto a tetrahedron (sort fold).
    static Vec3 map_to_tetrahedron(std::array<Vec3, 4> const& t, Vec3 const& u)
    {
        std::array<double, 3> s{u.x, u.y, u.z};
        std::sort(s.begin(), s.end());
        double b1 = s[0];
        double b2 = s[1] - s[0];
        double b3 = s[2] - s[1];
        double b0 = 1 - s[2];
        return t[0] * b0 + t[1] * b1 + t[2] * b2 + t[3] * b3;
    }

  private:
    std::vector<Halfspace> halfspaces_;
    std::vector<Vec3> vertices_;
    std::vector<Vec3> normals_;
    std::vector<Segment> edges_;
    std::vector<Triangle> triangles_;
    std::vector<std::array<Vec3, 4>> tets_;
    std::vector<double> cumulative_;
    Vec3 centroid_;
    Box bbox_ = Box::empty_box();
    double volume_{0};

    void build();
};

//---------------------------------------------------------------------------//
inline void Polytope::build()
{
    centroid_ = {};
    bbox_ = Box::empty_box();
    double scale = 0;
    for (auto const& v : vertices_)
    {
        centroid_ += v;
        bbox_.expand(v);
        scale = std::max(scale, norm(v));
    }
    centroid_ = centroid_ / static_cast<double>(vertices_.size());
    double tol = 1e-9 * std::max(1.0, scale);

    std::vector<std::pair<int, int>> edge_ids;
    for (auto const& h : halfspaces_)
    {
        normals_.push_back(h.normal);
        std::vector<int> on_face;
        Vec3 fc{};
        for (int i = 0; i < static_cast<int>(vertices_.size()); ++i)
        {
            double e = h.eval(vertices_[i]);
            expect(e <= tol, "polytope vertex violates a half-space");
            if (std::abs(e) <= tol)
            {
                on_face.push_back(i);
                fc += vertices_[i];
            }
        }
        expect(on_face.size() >= 3, "half-space does not support a face");
        fc = fc / static_cast<double>(on_face.size());
        Vec3 e1 = normalized(vertices_[on_face[0]] - fc);
        Vec3 e2 = cross(h.normal, e1);
        std::sort(on_face.begin(), on_face.end(), [&](int a, int b) {
            Vec3 da = vertices_[a] - fc;
            Vec3 db = vertices_[b] - fc;
            return std::atan2(dot(da, e2), dot(da, e1))
                   < std::atan2(dot(db, e2), dot(db, e1));
        });
        for (std::size_t k = 0; k < on_face.size(); ++k)
        {
            int a = on_face[k];
            int b = on_face[(k + 1) % on_face.size()];
            edge_ids.emplace_back(std::min(a, b), std::max(a, b));
        }
        for (std::size_t k = 1; k + 1 < on_face.size(); ++k)
        {
            triangles_.push_back({vertices_[on_face[0]],
                                  vertices_[on_face[k]],
                                  vertices_[on_face[k + 1]]});
        }
    }
    std::sort(edge_ids.begin(), edge_ids.end());
    edge_ids.erase(std::unique(edge_ids.begin(), edge_ids.end()), edge_ids.end());
    for (auto [a, b] : edge_ids)
    {
        edges_.push_back({vertices_[a], vertices_[b]});
    }

    double acc = 0;
    for (auto const& t : triangles_)
    {
        double v = triple(t[0] - centroid_, t[1] - centroid_, t[2] - centroid_)
                   / 6.0;
        expect(v > -tol, "polytope faces are not outward oriented");
        v = std::max(v, 0.0);
        tets_.push_back({centroid_, t[0], t[1], t[2]});
        acc += v;
        cumulative_.push_back(acc);
    }
    volume_ = acc;
    expect(volume_ > 0, "polytope has zero volume");
}

inline Polytope Polytope::hull(std::span<Vec3 const> points)
{
    std::vector<Vec3> pts;
    double scale = 0;
    for (auto const& p : points)
    {
        expect(is_finite(p), "hull point is not finite");
        scale = std::max(scale, norm(p));
    }
    double tol = 1e-9 * std::max(1.0, scale);
    for (auto const& p : points)
    {
        bool dup = std::any_of(pts.begin(), pts.end(), [&](Vec3 const& q) {
            return norm(p - q) <= tol;
        });
        if (!dup)
        {
            pts.push_back(p);
        }
    }
    expect(pts.size() >= 4, "hull needs at least four distinct points");

    std::vector<Halfspace> faces;
    auto add_face = [&](Vec3 n, double off) {
        for (auto const& f : faces)
        {
            if (dot(f.normal, n) > 1 - 1e-9 && std::abs(f.offset - off) <= tol)
            {
                return;
            }
        }
        faces.push_back({n, off});
    };
    std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i)
    {
        for (std::size_t j = i + 1; j < n; ++j)
        {
            for (std::size_t k = j + 1; k < n; ++k)
            {
                Vec3 nrm = cross(pts[j] - pts[i], pts[k] - pts[i]);
                double len = norm(nrm);
                if (len <= tol * tol)
                {
                    continue;
                }
                nrm = nrm / len;
                double off = dot(nrm, pts[i]);
                double lo = 0, hi = 0;
                for (auto const& p : pts)
                {
                    double e = dot(nrm, p) - off;
                    lo = std::min(lo, e);
                    hi = std::max(hi, e);
                }
                if (hi <= tol)
                {
                    add_face(nrm, off);
                }
                else if (lo >= -tol)
                {
                    add_face(-nrm, -off);
                }
            }
        }
    }
    std::vector<Vec3> verts;
    for (auto const& p : pts)
    {
        int count = 0;
        for (auto const& f : faces)
        {
            count += std::abs(f.eval(p)) <= tol ? 1 : 0;
        }
        if (count >= 3)
        {
            verts.push_back(p);
        }
    }
    return Polytope(std::move(faces), std::move(verts));
}

}  // namespace thermolim
