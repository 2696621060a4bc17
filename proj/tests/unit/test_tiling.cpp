#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "thermolim/tiling.hpp"

using namespace thermolim;

namespace
{
TilingFrame unit_frame(double ell = 1, double tau = 0)
{
    return {RigidMotion::identity(), ell, tau};
}

bool is_signed_permutation(Mat3 const& m)
{
    for (int i = 0; i < 3; ++i)
    {
        int nonzero = 0;
        for (int j = 0; j < 3; ++j)
        {
            double v = m.m[i][j];
            if (v != 0)
            {
                ++nonzero;
                if (std::abs(v) != 1)
                {
                    return false;
                }
            }
        }
        if (nonzero != 1)
        {
            return false;
        }
    }
    return true;
}

double triangle_area(Vec3 a, Vec3 b, Vec3 c)
{
    return 0.5 * norm(cross(b - a, c - a));
}
}  // namespace

TEST(CubeRotations, FormTheProperOctahedralGroup)
{
    auto const& rots = cube_rotations();
    EXPECT_EQ(rots[0], Mat3::identity());
    std::set<std::vector<double>> seen;
    for (auto const& r : rots)
    {
        EXPECT_TRUE(is_signed_permutation(r));
        EXPECT_EQ(r.det(), 1.0);
        std::vector<double> flat;
        for (auto const& row : r.m)
        {
            flat.insert(flat.end(), row.begin(), row.end());
        }
        seen.insert(flat);
    }
    EXPECT_EQ(seen.size(), 24u);
    for (auto const& a : rots)
    {
        for (auto const& b : rots)
        {
            Mat3 p = a * b;
            EXPECT_TRUE(std::any_of(rots.begin(), rots.end(),
                                    [&](Mat3 const& r) { return r == p; }));
        }
    }
}

TEST(ReferenceSimplex, Geometry)
{
    auto const& s = reference_simplex();
    EXPECT_NEAR(s.exact_volume(), 1.0 / 24, 1e-15);
    EXPECT_TRUE(s.contains({0.3, 0.1, 0.0}));
    EXPECT_TRUE(s.contains_closed({0, 0, 0}));
    EXPECT_FALSE(s.contains({0, 0, 0}));
    EXPECT_NEAR(s.circumradius_about_origin(), std::sqrt(3.0) / 2, 1e-15);

    // Face areas: cube-face quarter 1/4, two diagonal faces sqrt(2)/8 and one sqrt(2)/4.
    auto const& v = s.vertices();
    double total = triangle_area(v[1], v[2], v[3]) + triangle_area(v[0], v[2], v[3])
                   + triangle_area(v[0], v[1], v[3]) + triangle_area(v[0], v[1], v[2]);
    EXPECT_NEAR(triangle_area(v[1], v[2], v[3]), 0.25, 1e-15);
    EXPECT_NEAR(total, 0.25 + std::sqrt(2.0) / 4 + std::sqrt(2.0) / 4, 1e-12);

    auto c = recentered_reference_simplex();
    EXPECT_TRUE(c.contains({0, 0, 0}));
    EXPECT_NEAR(norm(c.centroid()), 0, 1e-15);
}

TEST(ReferenceSimplex, OrbitTilesTheCube)
{
    double total = 0;
    for (int k = 0; k < kCubeRotations; ++k)
    {
        total += tile(unit_frame(), {{0, 0, 0}, k}).exact_volume();
    }
    EXPECT_NEAR(total, 1.0, 1e-14);

    auto const& rots = cube_rotations();
    std::size_t n = 100000;
    std::size_t covered = sharded_count(n, [&](std::size_t i) {
        CounterRng rng(1, Stream::test, i);
        Vec3 w = uniform3(rng) - Vec3{0.5, 0.5, 0.5};
        int inside = 0;
        bool closure = false;
        for (auto const& r : rots)
        {
            Vec3 v = r.transposed() * w;
            inside += detail::in_reference_simplex(v) ? 1 : 0;
            closure = closure || detail::in_reference_simplex_closed(v, 1e-12);
        }
        return closure && inside <= 1;
    });
    EXPECT_EQ(covered, n);
}

TEST(Tile, Examples)
{
    auto id = tile(unit_frame(), {{0, 0, 0}, 0});
    EXPECT_EQ(id.vertices(), reference_simplex().vertices());
    EXPECT_NEAR(tile(unit_frame(3), {{1, -2, 0}, 5}).exact_volume(), 27.0 / 24, 1e-12);
    double base = tile(unit_frame(), {{0, 0, 0}, 7}).exact_volume();
    EXPECT_NEAR(tile(unit_frame(1, 0.1), {{0, 0, 0}, 7}).exact_volume() / base, 1.331, 1e-12);
    auto g = RigidMotion(sample_rotation(4, 0), {0.3, 0.2, -1});
    TilingFrame f{g, 2.0, 0.0};
    auto t = tile(f, {{1, 2, 3}, 11});
    auto v = tile_vertices(f, {{1, 2, 3}, 11});
    for (int k = 0; k < 4; ++k)
    {
        EXPECT_TRUE(t.contains_closed(v[k], 1e-9));
    }
}

TEST(Locate, ClosureContainsPoint)
{
    auto const& rots = cube_rotations();
    for (std::size_t i = 0; i < 20000; ++i)
    {
        CounterRng rng(2, Stream::test, i);
        Vec3 y{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
        auto t = locate(y);
        Vec3 z{static_cast<double>(t.cell[0]), static_cast<double>(t.cell[1]),
               static_cast<double>(t.cell[2])};
        EXPECT_TRUE(detail::in_reference_simplex_closed(rots[t.rot].transposed() * (y - z), 1e-12));
        EXPECT_EQ(locate_lexicographic(y), t);
    }
}

TEST(Locate, LexicographicTieBreak)
{
    EXPECT_EQ(locate_lexicographic({0, 0, 0}), (TileIndex{{0, 0, 0}, 0}));
    auto const& rots = cube_rotations();
    for (Vec3 y : {Vec3{0.5, 0, 0}, Vec3{0.5, 0.5, 0.5}, Vec3{-0.5, 0, 0.5}, Vec3{1, 1, 0}})
    {
        auto t = locate_lexicographic(y);
        // Brute force over the 27 neighboring cells.
        std::optional<TileIndex> best;
        for (int a = -2; a <= 2; ++a)
            for (int b = -2; b <= 2; ++b)
                for (int c = -2; c <= 2; ++c)
                    for (int k = 0; k < 24; ++k)
                    {
                        Vec3 w = y - Vec3{double(a), double(b), double(c)};
                        if (detail::in_reference_simplex_closed(rots[k].transposed() * w, 1e-12))
                        {
                            TileIndex cand{{a, b, c}, k};
                            if (!best || cand < *best)
                            {
                                best = cand;
                            }
                        }
                    }
        ASSERT_TRUE(best);
        EXPECT_EQ(t, *best);
    }
}

TEST(Enumerate, UnitCellAndCounts)
{
    auto f = unit_frame();
    auto cell = enumerate_intersecting(f, Box::cube({0, 0, 0}, 0.5));
    ASSERT_EQ(cell.size(), 24u);
    for (auto const& t : cell)
    {
        EXPECT_EQ(t.cell, (std::array<std::int64_t, 3>{0, 0, 0}));
    }
    auto eight = enumerate_intersecting(f, Box{{-0.5, -0.5, -0.5}, {1.5, 1.5, 1.5}});
    EXPECT_EQ(eight.size(), 192u);
    EXPECT_TRUE(std::is_sorted(eight.begin(), eight.end()));

    Box small{{0.1, 0.2, 0.3}, {1.9, 2.0, 2.2}};
    Box big = small.inflated(0.4);
    auto a = enumerate_intersecting(f, small);
    auto b = enumerate_intersecting(f, big);
    EXPECT_GE(a.size() * 24, static_cast<std::size_t>(small.volume() * 24 * 24) / 24);
    EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
    EXPECT_GE(static_cast<double>(a.size()), 24 * small.volume());
    EXPECT_TRUE(enumerate_intersecting(f, Box{}).empty());
}

TEST(Enumerate, NoFalseNegatives)
{
    auto g = RigidMotion(sample_rotation(11, 0), {0.1, 0.7, -0.3});
    TilingFrame f{g, 1.3, 0.05};
    Box box{{-1, 0, 0.5}, {1.2, 1.1, 2.0}};
    auto list = enumerate_intersecting(f, box);
    std::set<TileIndex> found(list.begin(), list.end());
    auto const& rots = cube_rotations();
    for (std::size_t i = 0; i < 3000; ++i)
    {
        CounterRng rng(3, Stream::test, i);
        Vec3 x = box.at(uniform3(rng));
        Vec3 y = f.to_lattice(x);
        auto t = locate(y);
        for (auto z0 = t.cell[0] - 1; z0 <= t.cell[0] + 1; ++z0)
            for (auto z1 = t.cell[1] - 1; z1 <= t.cell[1] + 1; ++z1)
                for (auto z2 = t.cell[2] - 1; z2 <= t.cell[2] + 1; ++z2)
                    for (int k = 0; k < 24; ++k)
                    {
                        Vec3 z{double(z0), double(z1), double(z2)};
                        Vec3 v = rots[k].transposed() * (y - z) / (1 + f.tau);
                        if (detail::in_reference_simplex(v))
                        {
                            EXPECT_TRUE(found.count({{z0, z1, z2}, k}));
                        }
                    }
    }
}

TEST(Partition, DisjointInteriorsAtTauZero)
{
    std::size_t n = 200000;
    std::size_t bad = sharded_count(n, [&](std::size_t i) {
        CounterRng rng(4, Stream::test, i);
        Vec3 y = Box{{-1.5, -1.5, -1.5}, {1.5, 1.5, 1.5}}.at(uniform3(rng));
        auto t = locate(y);
        int inside = 0;
        for (auto z0 = t.cell[0] - 1; z0 <= t.cell[0] + 1; ++z0)
            for (auto z1 = t.cell[1] - 1; z1 <= t.cell[1] + 1; ++z1)
                for (auto z2 = t.cell[2] - 1; z2 <= t.cell[2] + 1; ++z2)
                    for (int k = 0; k < 24; ++k)
                    {
                        Vec3 z{double(z0), double(z1), double(z2)};
                        inside += detail::in_reference_simplex(
                                      cube_rotations()[k].transposed() * (y - z))
                                      ? 1
                                      : 0;
                    }
        return inside != 1;
    });
    EXPECT_EQ(bad, 0u);
}

TEST(TileUnion, BoundaryMatchesFaceCountOracle)
{
    auto g = RigidMotion(sample_rotation(5, 0), {0.2, -0.1, 0.4});
    TilingFrame f{g, 0.8, 0};
    std::vector<TileIndex> tiles;
    for (std::size_t i = 0; i < 60; ++i)
    {
        CounterRng rng(5, Stream::test, i);
        tiles.push_back({{static_cast<std::int64_t>(rng.below(2)),
                          static_cast<std::int64_t>(rng.below(2)), 0},
                         static_cast<int>(rng.below(24))});
    }
    TileUnionShape u(f, tiles);
    // Oracle: faces whose vertex sets occur once among member tiles.
    std::map<std::vector<std::int64_t>, std::pair<int, Triangle>> faces;
    for (auto const& t : u.tiles())
    {
        auto const& rots = cube_rotations();
        auto const& ref = reference_simplex().vertices();
        Vec3 z{double(t.cell[0]), double(t.cell[1]), double(t.cell[2])};
        std::array<Vec3, 4> v;
        for (int k = 0; k < 4; ++k)
        {
            v[k] = z + rots[t.rot] * ref[k];
        }
        for (int skip = 0; skip < 4; ++skip)
        {
            std::vector<std::int64_t> key;
            Triangle tri;
            int m = 0;
            for (int k = 0; k < 4; ++k)
            {
                if (k == skip)
                    continue;
                tri[m++] = f.to_world(v[k]);
                for (int c = 0; c < 3; ++c)
                    key.push_back(std::llround(v[k][c] * 2));
            }
            std::vector<std::vector<std::int64_t>> pts{{key[0], key[1], key[2]},
                                                       {key[3], key[4], key[5]},
                                                       {key[6], key[7], key[8]}};
            std::sort(pts.begin(), pts.end());
            std::vector<std::int64_t> sorted;
            for (auto& p : pts)
                sorted.insert(sorted.end(), p.begin(), p.end());
            auto& entry = faces[sorted];
            entry.first += 1;
            entry.second = tri;
        }
    }
    std::vector<Triangle> boundary;
    for (auto const& [k, e] : faces)
    {
        if (e.first == 1)
            boundary.push_back(e.second);
    }
    EXPECT_EQ(boundary.size(), u.boundary().size());
    for (std::size_t i = 0; i < 2000; ++i)
    {
        CounterRng rng(6, Stream::test, i);
        Vec3 x = u.bbox().inflated(0.3).at(uniform3(rng));
        double brute = std::numeric_limits<double>::infinity();
        for (auto const& t : boundary)
            brute = std::min(brute, point_triangle_distance(x, t));
        EXPECT_NEAR(u.boundary_distance(x), brute, 1e-12);
    }
    EXPECT_NEAR(*u.exact_volume(), u.tiles().size() * 0.512 / 24, 1e-12);
}

TEST(TileUnion, InflatedMembershipAndDistance)
{
    TilingFrame f{RigidMotion::identity(), 1.0, 0.2};
    std::vector<TileIndex> tiles{{{0, 0, 0}, 0}, {{0, 0, 0}, 3}, {{1, 0, 0}, 9}};
    TileUnionShape u(f, tiles);
    std::vector<Polytope> polys;
    for (auto const& t : tiles)
        polys.push_back(tile(f, t));
    for (std::size_t i = 0; i < 5000; ++i)
    {
        CounterRng rng(7, Stream::test, i);
        Vec3 x = u.bbox().inflated(0.2).at(uniform3(rng));
        bool direct = false;
        double dmin = std::numeric_limits<double>::infinity();
        for (auto const& p : polys)
        {
            direct = direct || p.contains(x);
            dmin = std::min(dmin, std::abs(p.signed_distance(x)));
        }
        EXPECT_EQ(u.contains(x), direct);
        EXPECT_NEAR(u.boundary_distance(x), dmin, 1e-9);
    }
}

TEST(InnerApproximation, BallOfRadiusTen)
{
    auto ball = Domain::ball({0, 0, 0}, 10);
    auto a = inner_approximation(ball, unit_frame(), 0.1);
    EXPECT_FALSE(a.probabilistic);
    double frac = *a.union_domain.volume_hint() / *ball.volume_hint();
    EXPECT_GE(frac, 0.8);
    EXPECT_TRUE(std::is_sorted(a.kept.begin(), a.kept.end()));
    std::size_t outside = sharded_count(100000, [&](std::size_t i) {
        CounterRng rng(8, Stream::test, i);
        Vec3 x = a.union_domain.map_uniform(uniform3(rng));
        return !ball.contains(x);
    });
    EXPECT_EQ(outside, 0u);
    for (auto const& t : a.kept)
    {
        for (auto const& v : tile_vertices(a.frame, t))
        {
            ASSERT_LT(norm(v), 10 - 0.1);
        }
    }
}

TEST(InnerApproximation, SmallAndAlignedDomains)
{
    auto tiny = Domain::ball({0.2, 0.1, 0}, 0.3);
    auto a = inner_approximation(tiny, unit_frame(), 0.05);
    EXPECT_TRUE(a.kept.empty());
    EXPECT_DOUBLE_EQ(*a.union_domain.volume_hint(), 0.0);

    int n = 5;
    auto box = Domain::box(Box{{-0.5, -0.5, -0.5}, {n - 0.5, n - 0.5, n - 0.5}});
    auto b = inner_approximation(box, unit_frame(), 0.01);
    EXPECT_GE(b.kept.size(), 24u * (n - 2) * (n - 2) * (n - 2));

    EXPECT_THROW(inner_approximation(box, unit_frame(1e-4), 0.1), Error);
    EXPECT_THROW(inner_approximation(box, unit_frame(100), 0.1), Error);
    EXPECT_THROW(inner_approximation(box, unit_frame(), 0.0), Error);
}

TEST(InnerApproximation, MonotoneInDelta)
{
    auto g = RigidMotion(sample_rotation(12, 0), {0.3, 0.1, 0.2});
    TilingFrame f{g, 0.7, 0};
    for (auto const& omega : {Domain::ball({0, 0, 0}, 3), Domain::lshape(2.0),
                              Domain::polytope(Polytope::box(Box{{0, 0, 0}, {3, 2, 4}}))})
    {
        auto a = inner_approximation(omega, f, 0.05);
        auto b = inner_approximation(omega, f, 0.3);
        EXPECT_FALSE(a.probabilistic);
        EXPECT_LT(b.kept.size(), a.kept.size());
        EXPECT_TRUE(std::includes(a.kept.begin(), a.kept.end(), b.kept.begin(), b.kept.end()));
    }
}

TEST(InnerApproximation, SampledPathForGenericShapes)
{
    auto inter = Domain::intersection(Domain::ball({0, 0, 0}, 3), Domain::ball({1, 0, 0}, 3));
    auto a = inner_approximation(inter, unit_frame(0.8), 0.05, {}, 50000, 1);
    EXPECT_TRUE(a.probabilistic);
    EXPECT_FALSE(a.kept.empty());
    for (auto const& t : a.kept)
    {
        for (auto const& v : tile_vertices(a.frame, t))
        {
            EXPECT_LT(norm(v), 3);
            EXPECT_LT(norm(v - Vec3{1, 0, 0}), 3);
        }
    }
}

TEST(InnerApproximation, CoverageImprovesAsTilesShrink)
{
    auto ball = Domain::ball({0, 0, 0}, 10);
    double prev = 1.0;
    for (double ell : {4.0, 2.0, 1.0})
    {
        auto a = inner_approximation(ball, unit_frame(ell), 0.1);
        double miss = uncovered_fraction(ball, a);
        EXPECT_LT(miss, prev);
        prev = miss;
    }
}

TEST(InnerRegularity, BallFiniteMultiplier)
{
    auto ball = Domain::ball({0, 0, 0}, 10);
    EtaClass eta{24, 1, 0.2};
    std::vector<double> grid{0.0, 0.01, 0.02, 0.05};
    auto r = regularity_of_inner_approx_audit(ball, eta, unit_frame(), 0.1, grid, 40000, 3);
    EXPECT_TRUE(r.pass);
    EXPECT_TRUE(std::isfinite(r.smallest_m));
    EXPECT_LE(r.smallest_m, 64);
    EXPECT_EQ(r.audit.rows[0].sausage.value, 0.0);

    // Degenerate comparison: the plain audit at the same multiplier.
    auto plain = eta_regularity_audit(ball, eta, grid, 40000, 3, 64);
    EXPECT_TRUE(plain.pass);
}
