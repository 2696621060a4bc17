#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "thermolim/motion.hpp"

using namespace thermolim;

namespace
{
double max_abs_diff(Mat3 const& a, Mat3 const& b)
{
    double d = 0;
    for (int i = 0; i < 3; ++i)
    {
        for (int j = 0; j < 3; ++j)
        {
            d = std::max(d, std::abs(a.m[i][j] - b.m[i][j]));
        }
    }
    return d;
}

RigidMotion random_motion(std::uint64_t i)
{
    CounterRng rng(77, Stream::test, i);
    Vec3 u{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
    return {sample_rotation(rng), u};
}
}  // namespace

TEST(Rotation, MatrixIsOrthonormal)
{
    for (std::uint64_t i = 0; i < 1000; ++i)
    {
        auto r = sample_rotation(3, i);
        auto const& q = r.quaternion();
        EXPECT_NEAR(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3], 1, 1e-12);
        EXPECT_GE(q[0], 0);
        Mat3 m = r.matrix();
        EXPECT_LT(max_abs_diff(m * m.transposed(), Mat3::identity()), 1e-9);
        EXPECT_NEAR(m.det(), 1, 1e-9);
        auto back = Rotation::from_matrix(m);
        EXPECT_LT(max_abs_diff(back.matrix(), m), 1e-9);
    }
}

TEST(Rotation, AxisAngle)
{
    auto r = Rotation::axis_angle({0, 0, 1}, std::numbers::pi / 2);
    Vec3 v = r * Vec3{1, 0, 0};
    EXPECT_NEAR(v.x, 0, 1e-12);
    EXPECT_NEAR(v.y, 1, 1e-12);
    EXPECT_NEAR(r.angle(), std::numbers::pi / 2, 1e-12);
}

TEST(Rotation, HaarStatistics)
{
    constexpr std::size_t n = 1000000;
    auto sample = [](std::size_t i, int which) {
        Vec3 v = sample_rotation(5, i) * Vec3{1, 0, 0};
        return v[which];
    };
    for (int k = 0; k < 3; ++k)
    {
        auto m = sharded_moments(n, [&](std::size_t i) { return sample(i, k); });
        EXPECT_NEAR(m.mean(), 0.0, 4 * m.stderr_of_mean());
    }
    // Rotation angle density (1 - cos t)/pi has mean pi/2 + 2/pi.
    auto angle = sharded_moments(n, [](std::size_t i) {
        return sample_rotation(5, i).angle();
    });
    EXPECT_NEAR(std::numbers::pi / 2 + 2 / std::numbers::pi, 2.207416, 1e-6);
    EXPECT_NEAR(angle.mean(), std::numbers::pi / 2 + 2 / std::numbers::pi,
                4 * angle.stderr_of_mean());

    // Left-multiplying by a fixed rotation leaves the statistic unchanged.
    auto fixed = Rotation::axis_angle({1, 2, 3}, 0.7);
    auto shifted = sharded_moments(n, [&](std::size_t i) {
        return (fixed * sample_rotation(5, i)).angle();
    });
    EXPECT_NEAR(shifted.mean(), std::numbers::pi / 2 + 2 / std::numbers::pi,
                4 * shifted.stderr_of_mean());
}

TEST(Rotation, SphereMomentsUpToFour)
{
    constexpr std::size_t n = 400000;
    auto moment = [&](auto f) {
        return sharded_moments(n, [&](std::size_t i) {
            return f(sample_rotation(6, i) * Vec3{0, 0, 1});
        });
    };
    auto x2 = moment([](Vec3 v) { return v.x * v.x; });
    auto x4 = moment([](Vec3 v) { return v.z * v.z * v.z * v.z; });
    auto x2y2 = moment([](Vec3 v) { return v.x * v.x * v.y * v.y; });
    auto xy = moment([](Vec3 v) { return v.x * v.y; });
    EXPECT_NEAR(x2.mean(), 1.0 / 3, 4 * x2.stderr_of_mean());
    EXPECT_NEAR(x4.mean(), 1.0 / 5, 4 * x4.stderr_of_mean());
    EXPECT_NEAR(x2y2.mean(), 1.0 / 15, 4 * x2y2.stderr_of_mean());
    EXPECT_NEAR(xy.mean(), 0.0, 4 * xy.stderr_of_mean());
}

TEST(RigidMotion, GroupAxioms)
{
    for (std::uint64_t i = 0; i < 10000; ++i)
    {
        auto g = random_motion(3 * i);
        auto h = random_motion(3 * i + 1);
        CounterRng rng(8, Stream::test, i);
        Vec3 x{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
        EXPECT_LT(norm((g * h).apply(x) - g.apply(h.apply(x))), 1e-9);
        EXPECT_LT(norm(g.inverse().apply(g.apply(x)) - x), 1e-9);
        EXPECT_LT(norm(g.pullback(g.apply(x, 2.5), 2.5) - x), 1e-9);
    }
}

TEST(Apply, Examples)
{
    auto cube = Polytope::box(Box{{0, 0, 0}, {1, 1, 1}});
    auto same = apply(RigidMotion::identity(), 1.0, cube);
    EXPECT_EQ(same.vertices(), cube.vertices());
    EXPECT_NEAR(apply(RigidMotion::identity(), 2.0, cube).exact_volume(), 8.0, 1e-12);

    auto g = random_motion(1);
    auto l = Domain::lshape(1.0);
    auto moved = apply(g, 1.0, l);
    EXPECT_EQ(moved.kind(), DomainKind::moved);
    auto mc = volume(moved, 400000, 4, VolumeMode::monte_carlo);
    EXPECT_NEAR(mc.value, 7.0, 3 * mc.std_error);
    EXPECT_DOUBLE_EQ(*moved.volume_hint(), 7.0);
    Vec3 p{0.3, 0.4, 0.2};
    EXPECT_TRUE(moved.contains(g.apply(p)));
    EXPECT_NEAR(moved.boundary_distance(g.apply(p)), l.boundary_distance(p), 1e-9);

    auto ball = apply(g, 3.0, Domain::ball({1, 0, 0}, 1));
    EXPECT_EQ(ball.kind(), DomainKind::ball);
    EXPECT_NEAR(*ball.volume_hint(), 27 * 4.0 / 3 * std::numbers::pi, 1e-9);

    auto twice = apply(random_motion(2), 0.5, moved);
    auto direct = random_motion(2) * RigidMotion(g.rotation(), g.translation() * 0.5);
    Vec3 q{0.1, 1.5, 0.2};
    EXPECT_EQ(twice.contains(direct.apply(q, 0.5)), true);
    EXPECT_NEAR(*twice.volume_hint(), 7.0 / 8, 1e-12);
}

TEST(HaarIdentity, RecoversVolume)
{
    auto cube = Domain::box(Box::cube({0, 0, 0}, 0.5));
    auto est = haar_translation_identity(cube, {0, 0, 0}, 200000, 1);
    EXPECT_NEAR(est.value, 1.0, 3 * est.std_error);

    std::vector<Vec3> tet{{0, 0, 0}, {0.5, 0, 0}, {0.5, 0.5, -0.5}, {0.5, 0.5, 0.5}};
    auto simplex = Domain::polytope(Polytope::hull(tet));
    CounterRng rng(9, Stream::test, 0);
    for (int k = 0; k < 5; ++k)
    {
        Vec3 x{rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4)};
        auto e = haar_translation_identity(simplex, x, 200000, 10 + k);
        EXPECT_NEAR(e.value, 1.0 / 24, 3 * e.std_error);
    }
    auto ball = haar_translation_identity(Domain::ball({0, 0, 0}, 1), {2, -1, 7}, 200000, 3);
    EXPECT_NEAR(ball.value, 4.0 / 3 * std::numbers::pi, 3 * ball.std_error);

    EXPECT_THROW(haar_translation_identity(cube, {0, 0, 0}, 100, 1, 0.5), Error);
}
