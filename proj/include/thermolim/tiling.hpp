#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "core/error.hpp"
#include "core/parallel.hpp"
#include "geom/domain.hpp"
#include "geom/measure.hpp"
#include "geom/polytope.hpp"
#include "geom/primitives.hpp"
#include "geom/triangle_bvh.hpp"
#include "motion.hpp"

namespace thermolim
{
//---------------------------------------------------------------------------//
// Cube rotation group and reference simplex
//---------------------------------------------------------------------------//

inline constexpr int kCubeRotations = 24;

/*!
 * The 24 proper rotations of the cube as signed permutation matrices.
 *
 * Index 0 is the identity; the rest follow lexicographic order of
 * (permutation, sign pattern).
 */
inline std::array<Mat3, kCubeRotations> const& cube_rotations()
{
    static std::array<Mat3, kCubeRotations> const table = [] {
        std::array<Mat3, kCubeRotations> out{};
        std::array<int, 3> perm{0, 1, 2};
        int k = 0;
        do
        {
            for (int signs = 0; signs < 8; ++signs)
            {
                Mat3 m;
                for (int i = 0; i < 3; ++i)
                {
                    m.m[i][perm[i]] = (signs >> i) & 1 ? -1.0 : 1.0;
                }
                if (m.det() > 0)
                {
                    out[k++] = m;
                }
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        return out;
    }();
    return table;
}

namespace detail
{
//! Rotation index sending e0 to sa*e_a and e1 to sb*e_b.
inline int flag_rotation(int a, bool a_neg, int b, bool b_neg)
{
    static auto const table = [] {
        std::array<int, 36> t{};
        t.fill(-1);
        auto const& rots = cube_rotations();
        for (int k = 0; k < kCubeRotations; ++k)
        {
            Vec3 c0 = rots[k].column(0);
            Vec3 c1 = rots[k].column(1);
            int ia = 0, ib = 0;
            for (int i = 0; i < 3; ++i)
            {
                ia = c0[i] != 0 ? i : ia;
                ib = c1[i] != 0 ? i : ib;
            }
            int key = ((ia * 2 + (c0[ia] < 0)) * 3 + ib) * 2 + (c1[ib] < 0);
            t[key] = k;
        }
        return t;
    }();
    return table[((a * 2 + a_neg) * 3 + b) * 2 + b_neg];
}

//! Open membership in the reference simplex { 1/2 > v0 > v1 > |v2| }.
inline bool in_reference_simplex(Vec3 const& v)
{
    return v.x < 0.5 && v.y < v.x && std::abs(v.z) < v.y;
}

inline bool in_reference_simplex_closed(Vec3 const& v, double tol)
{
    return v.x <= 0.5 + tol && v.y <= v.x + tol && std::abs(v.z) <= v.y + tol;
}
}  // namespace detail

//! Reference simplex: one 24th of the unit cube centered at the origin.
inline Polytope const& reference_simplex()
{
    static Polytope const simplex = [] {
        double r2 = 1 / std::sqrt(2.0);
        std::vector<Halfspace> hs{{{1, 0, 0}, 0.5},
                                  {{-r2, r2, 0}, 0},
                                  {{0, -r2, r2}, 0},
                                  {{0, -r2, -r2}, 0}};
        std::vector<Vec3> vs{{0, 0, 0}, {0.5, 0, 0}, {0.5, 0.5, -0.5}, {0.5, 0.5, 0.5}};
        return Polytope(std::move(hs), std::move(vs));
    }();
    return simplex;
}

//! Radius of the inscribed sphere of the reference simplex (3V / area).
inline double reference_inradius()
{
    double area = 0;
    for (auto const& t : reference_simplex().triangles())
    {
        area += 0.5 * norm(cross(t[1] - t[0], t[2] - t[0]));
    }
    return 3 * reference_simplex().exact_volume() / area;
}

//! Reference simplex translated so its barycenter is the origin.
inline Polytope recentered_reference_simplex()
{
    auto const& s = reference_simplex();
    return s.transformed(Mat3::identity(), 1.0, -s.centroid());
}

//---------------------------------------------------------------------------//
//! Element (z, R) of the discrete group Z^3 x O(24).
//! Orbit of the reference simplex under the cube rotations against the cube.
struct OrbitCoverReport
{
    //! Sum of exact volumes of the 24 images.
    double volume_sum{0};
    std::size_t samples{0};
    //! Points in the open interior of more than one image.
    double double_cover{0};
    //! Points in the closure of no image.
    double uncovered{0};
    bool pass{false};
};

/*!
 * Exact volume sum plus a sampled multiplicity count over the unit cube;
 * passes iff the volume sum is 1 to rounding and the double-cover fraction
 * is below `max_double`.
 */
inline OrbitCoverReport orbit_cover_check(std::size_t samples, std::uint64_t seed,
                                          double max_double = 1e-3)
{
    expect(samples >= 1, "samples must be >= 1");
    OrbitCoverReport rep;
    rep.samples = samples;
    auto const& rots = cube_rotations();
    std::vector<double> vols;
    for (auto const& r : rots)
    {
        vols.push_back(reference_simplex().transformed(r, 1.0, {0, 0, 0}).exact_volume());
    }
    rep.volume_sum = tree_reduce(std::move(vols), std::plus<>{});
    auto multiplicity = [&](std::size_t i) {
        CounterRng rng(seed, Stream::volume, i);
        Vec3 w = uniform3(rng) - Vec3{0.5, 0.5, 0.5};
        std::pair<int, bool> m{0, false};
        for (auto const& r : rots)
        {
            Vec3 v = r.transposed() * w;
            m.first += detail::in_reference_simplex(v) ? 1 : 0;
            m.second = m.second || detail::in_reference_simplex_closed(v, 1e-12);
        }
        return m;
    };
    std::size_t dbl = sharded_count(samples, [&](std::size_t i) { return multiplicity(i).first > 1; });
    std::size_t un = sharded_count(samples, [&](std::size_t i) { return !multiplicity(i).second; });
    rep.double_cover = static_cast<double>(dbl) / static_cast<double>(samples);
    rep.uncovered = static_cast<double>(un) / static_cast<double>(samples);
    rep.pass = std::abs(rep.volume_sum - 1) <= 1e-12 && rep.double_cover < max_double
               && rep.uncovered < max_double;
    return rep;
}

struct TileIndex
{
    std::array<std::int64_t, 3> cell{0, 0, 0};
    int rot{0};

    friend auto operator<=>(TileIndex const&, TileIndex const&) = default;
};

inline std::ostream& operator<<(std::ostream& os, TileIndex const& t)
{
    return os << '[' << t.cell[0] << ',' << t.cell[1] << ',' << t.cell[2] << ";"
              << t.rot << ']';
}

//! Placement of the lattice tiling: tile(mu) = ell g mu (1+tau) simplex.
struct TilingFrame
{
    RigidMotion g;
    double ell{1};
    double tau{0};

    void validate() const
    {
        expect(ell > 0 && std::isfinite(ell), "ell must be > 0");
        expect(tau >= 0 && std::isfinite(tau), "tau must be ≥ 0");
    }

    //! World point to lattice coordinates.
    Vec3 to_lattice(Vec3 const& x) const { return g.pullback(x, ell); }
    //! Lattice coordinates to world point.
    Vec3 to_world(Vec3 const& y) const { return g.apply(y, ell); }
};

//! Vertices of tile(mu) in world coordinates.
inline std::array<Vec3, 4> tile_vertices(TilingFrame const& f, TileIndex const& mu)
{
    auto const& rot = cube_rotations()[mu.rot];
    auto const& vs = reference_simplex().vertices();
    Vec3 z{static_cast<double>(mu.cell[0]), static_cast<double>(mu.cell[1]),
           static_cast<double>(mu.cell[2])};
    std::array<Vec3, 4> out;
    for (int k = 0; k < 4; ++k)
    {
        out[k] = f.to_world(z + rot * (vs[k] * (1 + f.tau)));
    }
    return out;
}

//! Tile as an exact polytope.
inline Polytope tile(TilingFrame const& f, TileIndex const& mu)
{
    f.validate();
    expect(mu.rot >= 0 && mu.rot < kCubeRotations, "rotation index out of range");
    Vec3 z{static_cast<double>(mu.cell[0]), static_cast<double>(mu.cell[1]),
           static_cast<double>(mu.cell[2])};
    Polytope local = reference_simplex().transformed(
        cube_rotations()[mu.rot], 1 + f.tau, z);
    return local.transformed(f.g.matrix(), f.ell, f.g.translation());
}

//! Tile whose closure contains lattice point y (ties resolved arbitrarily).
inline TileIndex locate(Vec3 const& y)
{
    TileIndex t;
    Vec3 w;
    for (int i = 0; i < 3; ++i)
    {
        double z = std::floor(y[i] + 0.5);
        t.cell[i] = static_cast<std::int64_t>(z);
        w[i] = y[i] - z;
    }
    int a = 0;
    for (int i = 1; i < 3; ++i)
    {
        a = std::abs(w[i]) > std::abs(w[a]) ? i : a;
    }
    int b = a == 0 ? 1 : 0;
    int c = 3 - a - b;
    b = std::abs(w[c]) > std::abs(w[b]) ? c : b;
    t.rot = detail::flag_rotation(a, w[a] < 0, b, w[b] < 0);
    return t;
}

/*!
 * Tile whose closure contains lattice point y, choosing the
 * lexicographically smallest index among all such tiles.
 */
inline TileIndex locate_lexicographic(Vec3 const& y, double tol = 1e-12)
{
    std::array<std::vector<std::int64_t>, 3> options;
    for (int i = 0; i < 3; ++i)
    {
        double fl = std::floor(y[i]);
        for (double z : {fl, fl + 1})
        {
            if (std::abs(y[i] - z) <= 0.5 + tol)
            {
                options[i].push_back(static_cast<std::int64_t>(z));
            }
        }
    }
    std::optional<TileIndex> best;
    auto const& rots = cube_rotations();
    for (auto z0 : options[0])
    {
        for (auto z1 : options[1])
        {
            for (auto z2 : options[2])
            {
                Vec3 w = y
                         - Vec3{static_cast<double>(z0), static_cast<double>(z1),
                                static_cast<double>(z2)};
                for (int k = 0; k < kCubeRotations; ++k)
                {
                    Vec3 v = rots[k].transposed() * w;
                    if (detail::in_reference_simplex_closed(v, tol))
                    {
                        TileIndex t{{z0, z1, z2}, k};
                        if (!best || t < *best)
                        {
                            best = t;
                        }
                        break;
                    }
                }
            }
        }
    }
    expect(best.has_value(), "point not covered by the tiling");
    return *best;
}

//---------------------------------------------------------------------------//
namespace detail
{
inline bool overlap_on_axis(std::span<Vec3 const> tet, Box const& box, Vec3 const& axis)
{
    double n = norm(axis);
    if (n < 1e-12)
    {
        return true;
    }
    Vec3 u = axis / n;
    double tlo = dot(tet[0], u), thi = tlo;
    for (std::size_t i = 1; i < tet.size(); ++i)
    {
        double v = dot(tet[i], u);
        tlo = std::min(tlo, v);
        thi = std::max(thi, v);
    }
    Vec3 c = box.center();
    Vec3 h = box.extent() * 0.5;
    double r = h.x * std::abs(u.x) + h.y * std::abs(u.y) + h.z * std::abs(u.z);
    double bc = dot(c, u);
    double tol = 1e-12 * (1 + std::abs(bc) + r);
    return thi > bc - r + tol && tlo < bc + r - tol;
}
}  // namespace detail

//! Whether a tetrahedron and an axis-aligned box have intersecting interiors.
inline bool tet_box_interiors_intersect(std::array<Vec3, 4> const& tet, Box const& box)
{
    static constexpr std::array<std::array<int, 2>, 6> edges{
        {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
    static constexpr std::array<std::array<int, 3>, 4> faces{
        {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};
    for (int i = 0; i < 3; ++i)
    {
        Vec3 e;
        e[i] = 1;
        if (!detail::overlap_on_axis(tet, box, e))
        {
            return false;
        }
    }
    for (auto const& f : faces)
    {
        Vec3 n = cross(tet[f[1]] - tet[f[0]], tet[f[2]] - tet[f[0]]);
        if (!detail::overlap_on_axis(tet, box, n))
        {
            return false;
        }
    }
    for (auto const& e : edges)
    {
        Vec3 d = tet[e[1]] - tet[e[0]];
        for (int i = 0; i < 3; ++i)
        {
            Vec3 a;
            a[i] = 1;
            if (!detail::overlap_on_axis(tet, box, cross(d, a)))
            {
                return false;
            }
        }
    }
    return true;
}

namespace detail
{
//! Integer cell range whose (inflated) cubes may meet the world box.
inline std::array<std::array<std::int64_t, 2>, 3>
candidate_cells(TilingFrame const& f, Box const& box, double pad = 0)
{
    Box lat = Box::empty_box();
    for (auto const& c : box.corners())
    {
        lat.expand(f.to_lattice(c));
    }
    double reach = 0.5 * (1 + f.tau) + pad;
    std::array<std::array<std::int64_t, 2>, 3> r;
    for (int i = 0; i < 3; ++i)
    {
        r[i] = {static_cast<std::int64_t>(std::floor(lat.lo[i] - reach)),
                static_cast<std::int64_t>(std::ceil(lat.hi[i] + reach))};
    }
    return r;
}

inline std::size_t cell_count(std::array<std::array<std::int64_t, 2>, 3> const& r)
{
    std::size_t n = 1;
    for (auto const& s : r)
    {
        n *= static_cast<std::size_t>(s[1] - s[0] + 1);
    }
    return n;
}

inline std::array<std::int64_t, 3>
cell_at(std::array<std::array<std::int64_t, 2>, 3> const& r, std::size_t flat)
{
    std::array<std::int64_t, 3> z;
    for (int i = 2; i >= 0; --i)
    {
        auto span = static_cast<std::size_t>(r[i][1] - r[i][0] + 1);
        z[i] = r[i][0] + static_cast<std::int64_t>(flat % span);
        flat /= span;
    }
    return z;
}

template<class F>
std::vector<TileIndex> collect_cells(std::array<std::array<std::int64_t, 2>, 3> const& r, F&& per_cell)
{
    std::size_t n = cell_count(r);
    std::size_t shards = std::min<std::size_t>(kDefaultShards, std::max<std::size_t>(n, 1));
    auto parts = map_shards<std::vector<TileIndex>>(shards, [&](std::size_t k) {
        std::vector<TileIndex> out;
        auto range = shard_range(n, shards, k);
        for (std::size_t i = range.begin; i < range.end; ++i)
        {
            per_cell(cell_at(r, i), out);
        }
        return out;
    });
    std::vector<TileIndex> all;
    for (auto& p : parts)
    {
        all.insert(all.end(), p.begin(), p.end());
    }
    return all;
}
}  // namespace detail

/*!
 * Every tile whose interior meets the interior of a world box, in
 * lexicographic order.
 */
inline std::vector<TileIndex> enumerate_intersecting(TilingFrame const& f, Box const& box)
{
    f.validate();
    if (box.degenerate())
    {
        return {};
    }
    auto range = detail::candidate_cells(f, box);
    return detail::collect_cells(range, [&](std::array<std::int64_t, 3> z, auto& out) {
        for (int k = 0; k < kCubeRotations; ++k)
        {
            TileIndex mu{z, k};
            if (tet_box_interiors_intersect(tile_vertices(f, mu), box))
            {
                out.push_back(mu);
            }
        }
    });
}

//---------------------------------------------------------------------------//
// Tile unions
//---------------------------------------------------------------------------//

namespace detail
{
struct CellHash
{
    std::size_t operator()(std::array<std::int64_t, 3> const& z) const
    {
        std::uint64_t h = mix64(static_cast<std::uint64_t>(z[0]));
        h = mix64(h ^ static_cast<std::uint64_t>(z[1]));
        h = mix64(h ^ static_cast<std::uint64_t>(z[2]));
        return static_cast<std::size_t>(h);
    }
};
}  // namespace detail

/*!
 * Union of a finite set of tiles of one frame.
 *
 * At tau = 0 the tiles are disjoint and the boundary is the set of faces
 * not shared with another member; these are held in a BVH, giving exact
 * boundary distances and an exact volume. At tau > 0 distances use the
 * smallest member-tile distance, a lower bound on the true value inside.
 */
class TileUnionShape final : public Shape
{
  public:
    TileUnionShape(TilingFrame frame, std::vector<TileIndex> tiles)
        : frame_(frame), tiles_(std::move(tiles))
    {
        frame_.validate();
        std::sort(tiles_.begin(), tiles_.end());
        tiles_.erase(std::unique(tiles_.begin(), tiles_.end()), tiles_.end());
        box_ = Box::empty_box();
        for (auto const& t : tiles_)
        {
            expect(t.rot >= 0 && t.rot < kCubeRotations, "rotation index out of range");
            masks_[t.cell] |= 1u << t.rot;
            for (auto const& v : tile_vertices(frame_, t))
            {
                box_.expand(v);
            }
        }
        if (tiles_.empty())
        {
            box_ = Box{};
        }
        if (frame_.tau == 0)
        {
            build_boundary();
        }
    }

    TilingFrame const& frame() const { return frame_; }
    std::vector<TileIndex> const& tiles() const { return tiles_; }
    TriangleBvh const& boundary() const { return bvh_; }

    bool has(TileIndex const& t) const
    {
        auto it = masks_.find(t.cell);
        return it != masks_.end() && ((it->second >> t.rot) & 1u);
    }

    DomainKind kind() const override { return DomainKind::tile_union; }
    std::string describe() const override
    {
        std::ostringstream os;
        os << "tile_union(n=" << tiles_.size() << ",ell=" << frame_.ell
           << ",tau=" << frame_.tau << ")";
        return os.str();
    }
    bool contains(Vec3 const& x) const override
    {
        if (tiles_.empty() || !box_.contains(x))
        {
            return false;
        }
        Vec3 y = frame_.to_lattice(x);
        if (frame_.tau == 0)
        {
            return has(locate(y));
        }
        bool found = false;
        for_each_candidate(y, 0.0, [&](TileIndex const& t) {
            if (!found && detail::in_reference_simplex(local(y, t, frame_.tau)))
            {
                found = true;
            }
        });
        return found;
    }
    Box bbox() const override { return box_; }
    std::optional<double> exact_volume() const override
    {
        if (frame_.tau == 0 || tiles_.size() <= 1)
        {
            double cell = std::pow(frame_.ell * (1 + frame_.tau), 3);
            return static_cast<double>(tiles_.size()) * cell / kCubeRotations;
        }
        return std::nullopt;
    }
    bool has_exact_distance() const override { return frame_.tau == 0; }
    double boundary_distance(Vec3 const& x) const override
    {
        if (frame_.tau == 0)
        {
            return bvh_.distance(x);
        }
        return member_distance(x, std::numeric_limits<double>::infinity());
    }
    bool near_boundary(Vec3 const& x, double s) const override
    {
        if (frame_.tau == 0)
        {
            return bvh_.within(x, s);
        }
        return member_distance(x, s) <= s;
    }
    bool has_uniform_map() const override
    {
        return frame_.tau == 0 && !tiles_.empty();
    }
    Vec3 map_uniform(Vec3 const& u) const override
    {
        double pos = u.x * static_cast<double>(tiles_.size());
        auto k = std::min(static_cast<std::size_t>(pos), tiles_.size() - 1);
        auto v = tile_vertices(frame_, tiles_[k]);
        Vec3 w{std::clamp(pos - static_cast<double>(k), 0.0, 1.0), u.y, u.z};
        return Polytope::map_to_tetrahedron(v, w);
    }

  private:
    TilingFrame frame_;
    std::vector<TileIndex> tiles_;
    std::unordered_map<std::array<std::int64_t, 3>, std::uint32_t, detail::CellHash> masks_;
    Box box_;
    TriangleBvh bvh_;

    static Vec3 local(Vec3 const& y, TileIndex const& t, double tau = 0)
    {
        Vec3 z{static_cast<double>(t.cell[0]), static_cast<double>(t.cell[1]),
               static_cast<double>(t.cell[2])};
        return cube_rotations()[t.rot].transposed() * (y - z) / (1 + tau);
    }

    //! Visit member tiles whose inflated cell lies within `pad` (lattice units) of y.
    template<class F>
    void for_each_candidate(Vec3 const& y, double pad, F&& visit) const
    {
        double reach = 0.5 * (1 + frame_.tau) + pad;
        std::array<std::int64_t, 3> lo, hi;
        for (int i = 0; i < 3; ++i)
        {
            lo[i] = static_cast<std::int64_t>(std::ceil(y[i] - reach));
            hi[i] = static_cast<std::int64_t>(std::floor(y[i] + reach));
        }
        for (auto z0 = lo[0]; z0 <= hi[0]; ++z0)
        {
            for (auto z1 = lo[1]; z1 <= hi[1]; ++z1)
            {
                for (auto z2 = lo[2]; z2 <= hi[2]; ++z2)
                {
                    auto it = masks_.find({z0, z1, z2});
                    if (it == masks_.end())
                    {
                        continue;
                    }
                    for (int k = 0; k < kCubeRotations; ++k)
                    {
                        if ((it->second >> k) & 1u)
                        {
                            visit(TileIndex{{z0, z1, z2}, k});
                        }
                    }
                }
            }
        }
    }

    // Smallest |signed distance| to member tiles, searched within `limit`.
    double member_distance(Vec3 const& x, double limit) const
    {
        Vec3 y = frame_.to_lattice(x);
        double scale = frame_.ell * (1 + frame_.tau);
        double pad = std::isfinite(limit) ? limit / frame_.ell
                                          : box_.diagonal() / frame_.ell + 1;
        double best = std::numeric_limits<double>::infinity();
        auto const& ref = reference_simplex();
        for_each_candidate(y, pad, [&](TileIndex const& t) {
            Vec3 v = local(y, t, frame_.tau);
            best = std::min(best, scale * std::abs(ref.signed_distance(v)));
        });
        return best;
    }

    void build_boundary()
    {
        static constexpr std::array<std::array<int, 3>, 4> faces{
            {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};
        auto const& ref = reference_simplex().vertices();
        auto const& rots = cube_rotations();
        std::vector<Triangle> tris;
        for (auto const& t : tiles_)
        {
            Vec3 z{static_cast<double>(t.cell[0]), static_cast<double>(t.cell[1]),
                   static_cast<double>(t.cell[2])};
            std::array<Vec3, 4> v;
            for (int k = 0; k < 4; ++k)
            {
                v[k] = z + rots[t.rot] * ref[k];
            }
            for (int f = 0; f < 4; ++f)
            {
                Vec3 a = v[faces[f][0]];
                Vec3 b = v[faces[f][1]];
                Vec3 c = v[faces[f][2]];
                Vec3 centroid = (a + b + c) / 3.0;
                Vec3 outward = centroid - v[f];
                Vec3 n = normalized(cross(b - a, c - a));
                if (dot(n, outward) < 0)
                {
                    n = -n;
                }
                TileIndex across = locate(centroid + n * 1e-7);
                if (!has(across))
                {
                    tris.push_back({frame_.to_world(a), frame_.to_world(b),
                                    frame_.to_world(c)});
                }
            }
        }
        bvh_ = TriangleBvh(std::move(tris));
    }
};

//---------------------------------------------------------------------------//
// Inner approximation
//---------------------------------------------------------------------------//

//! Admissible range ell0 < ell < |domain|^{1/3} ell1 for the tile scale.
struct InnerGuards
{
    double ell0{1e-3};
    double ell1{10};
};

struct InnerApprox
{
    TilingFrame frame;
    double delta{0};
    std::vector<TileIndex> kept;
    Domain union_domain;
    //! True when some containment decision relied on sampling.
    bool probabilistic{false};

    TileUnionShape const& union_shape() const
    {
        return *union_domain.as<TileUnionShape>();
    }
};

namespace detail
{
//! Sampled containment test for shapes without a certified path.
inline bool sampled_inside(Shape const& omega, std::array<Vec3, 4> const& v, double delta)
{
    constexpr int kGrid = 6;
    for (int i = 0; i <= kGrid; ++i)
    {
        for (int j = 0; i + j <= kGrid; ++j)
        {
            for (int k = 0; i + j + k <= kGrid; ++k)
            {
                int l = kGrid - i - j - k;
                Vec3 p = (v[0] * i + v[1] * j + v[2] * k + v[3] * l) / kGrid;
                if (!omega.contains(p) || omega.near_boundary(p, delta))
                {
                    return false;
                }
            }
        }
    }
    return true;
}
}  // namespace detail

/*!
 * Union of the tiles lying in the domain at boundary distance greater than
 * delta.
 *
 * Cells far from the boundary are decided from the exact distance at the
 * cell center; remaining tiles use the shape's certified test, or dense
 * sampling when the shape has none.
 */
inline InnerApprox inner_approximation(Domain const& omega, TilingFrame const& frame,
                                       double delta, InnerGuards guards = {},
                                       std::size_t samples = 100000,
                                       std::uint64_t seed = 0)
{
    frame.validate();
    expect(delta > 0, "delta must be > 0");
    InnerApprox out;
    out.frame = frame;
    out.delta = delta;
    if (omega.is_empty())
    {
        out.union_domain = Domain(std::make_shared<TileUnionShape>(frame, std::vector<TileIndex>{}));
        return out;
    }
    double vol = volume(omega, samples, derive_seed(seed, Stream::volume)).value;
    expect(frame.ell > guards.ell0 && frame.ell < std::cbrt(vol) * guards.ell1,
           "inner-approximation guards violated");

    Shape const& shape = omega.shape();
    bool exact = shape.has_exact_distance();
    double cell_radius = frame.ell * (1 + frame.tau) * std::sqrt(3.0) / 2;
    auto range = detail::candidate_cells(frame, omega.bbox());
    std::atomic<bool> sampled{false};
    out.kept = detail::collect_cells(range, [&](std::array<std::int64_t, 3> z, auto& kept) {
        Vec3 c = frame.to_world({static_cast<double>(z[0]), static_cast<double>(z[1]),
                                 static_cast<double>(z[2])});
        if (exact)
        {
            bool inside = shape.contains(c);
            double d = shape.boundary_distance(c);
            if (!inside && d > cell_radius)
            {
                return;
            }
            if (inside && d > cell_radius + delta)
            {
                for (int k = 0; k < kCubeRotations; ++k)
                {
                    kept.push_back({z, k});
                }
                return;
            }
        }
        for (int k = 0; k < kCubeRotations; ++k)
        {
            TileIndex mu{z, k};
            auto v = tile_vertices(frame, mu);
            auto certified = shape.certify_inside(v, delta);
            bool keep;
            if (certified)
            {
                keep = *certified;
            }
            else
            {
                sampled = true;
                keep = detail::sampled_inside(shape, v, delta);
            }
            if (keep)
            {
                kept.push_back(mu);
            }
        }
    });
    out.probabilistic = sampled;
    out.union_domain = Domain(std::make_shared<TileUnionShape>(frame, out.kept));
    return out;
}

//! Fraction |domain \ A| / |domain| for an inner approximation A of it.
inline double uncovered_fraction(Domain const& omega, InnerApprox const& a,
                                 std::size_t samples = 100000, std::uint64_t seed = 0)
{
    double v = volume(omega, samples, seed).value;
    double va = a.kept.empty() ? 0.0 : volume(a.union_domain, samples, seed).value;
    return (v - va) / v;
}

//---------------------------------------------------------------------------//
struct InnerRegularityReport
{
    std::size_t kept{0};
    double covered_fraction{0};
    RegularityReport audit;  //!< at the configured multiplier
    double smallest_m{0};    //!< smallest multiplier passing every row
    bool pass{false};
};

/*!
 * Regularity audit of the inner approximation against m * eta, reporting
 * the smallest multiplier that passes at three standard errors.
 */
inline InnerRegularityReport
regularity_of_inner_approx_audit(Domain const& omega, EtaClass const& eta,
                                 TilingFrame const& frame, double delta,
                                 std::span<double const> t_grid, std::size_t samples,
                                 std::uint64_t seed, double m = 64,
                                 InnerGuards guards = {})
{
    auto approx = inner_approximation(omega, frame, delta, guards, samples, seed);
    InnerRegularityReport out;
    out.kept = approx.kept.size();
    expect(!approx.kept.empty(), "inner approximation is empty");
    out.audit = eta_regularity_audit(approx.union_domain, eta, t_grid, samples,
                                     derive_seed(seed, Stream::sausage), m);
    out.covered_fraction
        = out.audit.volume / volume(omega, samples, derive_seed(seed, Stream::volume)).value;
    for (auto const& row : out.audit.rows)
    {
        double base = out.audit.volume * eta(row.t);
        if (base > 0)
        {
            double need = (row.sausage.value - 3 * row.sausage.std_error) / base;
            out.smallest_m = std::max(out.smallest_m, need);
        }
    }
    out.pass = out.audit.pass;
    return out;
}

}  // namespace thermolim
