#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "thermolim/models.hpp"

using namespace thermolim;

namespace
{
constexpr double kPi = std::numbers::pi;

//! Ball average of cos(k u_x) over u in B(0, R).
double ball_cos_average(double k, double R)
{
    double x = k * R;
    return 3 * (std::sin(x) - x * std::cos(x)) / (x * x * x);
}

TilingFrame random_frame(std::uint64_t seed, double ell)
{
    CounterRng rng(seed, Stream::test, 0);
    Rotation r = sample_rotation(rng);
    Vec3 w = uniform3(rng);
    return {RigidMotion(r, w * ell), ell, 0.0};
}

//! Direct O(n^2) pair sum over the integer sites of a domain.
double brute_lattice_energy(Domain const& d, LatticePairParams const& p)
{
    Box b = d.bbox();
    std::vector<Vec3> sites;
    for (auto x = std::ceil(b.lo.x); x <= b.hi.x; ++x)
    {
        for (auto y = std::ceil(b.lo.y); y <= b.hi.y; ++y)
        {
            for (auto z = std::ceil(b.lo.z); z <= b.hi.z; ++z)
            {
                if (d.contains({x, y, z}))
                {
                    sites.push_back({x, y, z});
                }
            }
        }
    }
    double e = p.self_energy * static_cast<double>(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i)
    {
        for (std::size_t j = i + 1; j < sites.size(); ++j)
        {
            double r = norm(sites[i] - sites[j]);
            if (r <= p.r_cut + 1e-12)
            {
                e += p.z * p.z * std::exp(-p.m * r) / r;
            }
        }
    }
    return e;
}
}  // namespace

//---------------------------------------------------------------------------//
// Local functionals
//---------------------------------------------------------------------------//

TEST(LocalFunctional, BoxIntegralClosedForm)
{
    auto m = LocalFunctionalModel::sin2();
    auto e = m->energy(Domain::box(Box{{0, 0, 0}, {1, 2, 3}}));
    EXPECT_TRUE(e.deterministic);
    EXPECT_NEAR(e.value, 3.0, 1e-12);
    EXPECT_NEAR(m->energy(Domain::box(Box{{0, 0, 0}, {0.25, 0.25, 0.25}})).value, 0.0078125,
                1e-15);
    EXPECT_NEAR(LocalFunctionalModel(LocalDensity::sin2).chi({0.25, 7, -3}), 1.0, 1e-15);
    EXPECT_EQ(m->exact_limit(), 0.5);
}

TEST(LocalFunctional, BallMatchesOracle)
{
    auto m = LocalFunctionalModel::sin2();
    double R = 1;
    double vol = 4.0 / 3 * kPi;
    double expect = vol / 2 * (1 - ball_cos_average(4 * kPi, R));
    auto e = m->energy(Domain::ball({0, 0, 0}, R), {200000, 3});
    EXPECT_FALSE(e.deterministic);
    EXPECT_GT(e.std_error, 0);
    EXPECT_NEAR(e.value, expect, 3 * e.std_error + 1e-9);
}

TEST(LocalFunctional, ConstantIsExact)
{
    auto m = make_model("local-const", {{"c", 2.5}});
    EXPECT_EQ(m->name(), "local-const");
    EXPECT_DOUBLE_EQ(m->kappa(), 2.5);
    auto ball = m->energy(Domain::ball({1, 2, 3}, 2));
    EXPECT_TRUE(ball.deterministic);
    EXPECT_NEAR(ball.value, 2.5 * 32.0 / 3 * kPi, 1e-12);
    EXPECT_NEAR(m->energy(Domain::lshape(2)).value, 2.5 * 56, 1e-12);
}

TEST(EnergyModel, EmptyDomainIsZero)
{
    for (auto const& name : model_names())
    {
        auto e = make_model(name)->energy(Domain::empty());
        EXPECT_EQ(e.value, 0.0) << name;
        EXPECT_EQ(e.std_error, 0.0) << name;
    }
}

TEST(Registry, RejectsUnknowns)
{
    EXPECT_THROW(make_model("nope"), Error);
    EXPECT_THROW(make_model("lattice", {{"zz", 1}}), Error);
    EXPECT_THROW(make_model("local-sin", {{"c", 1}}), Error);
    auto m = make_model("lattice", {{"z", 0.5}, {"r_cut", 1.5}});
    EXPECT_EQ(m->params().at("z"), 0.5);
    EXPECT_EQ(m->params().at("r_cut"), 1.5);
    EXPECT_EQ(make_model("gaussian", {{"T", 2}})->params().at("T"), 2);
}

//---------------------------------------------------------------------------//
// Lattice pair model
//---------------------------------------------------------------------------//

TEST(LatticePair, MatchesBruteForcePairSum)
{
    std::vector<LatticePairParams> cases(3);
    cases[1].r_cut = 1.8;
    cases[1].m = 0.5;
    cases[2].r_cut = 2.01;
    cases[2].z = 0.7;
    std::vector<Domain> domains{Domain::ball({0.1, 0.2, 0.3}, 2.3),
                                Domain::box(Box{{-0.5, -0.5, -0.5}, {3.5, 2.5, 4.5}}),
                                Domain::lshape(2)};
    for (auto const& p : cases)
    {
        LatticePairModel m(p);
        for (auto const& d : domains)
        {
            double want = brute_lattice_energy(d, p);
            EXPECT_NEAR(m.energy(d).value, want, 1e-9 * std::abs(want)) << d.describe();
        }
    }
}

TEST(LatticePair, BulkEnergyPerSite)
{
    LatticePairModel m;
    // self energy plus three nearest-neighbour bonds per site
    double frozen = -1 + 3 * 0.09 * std::exp(-1.0);
    EXPECT_NEAR(m.bulk_energy_per_site(), frozen, 1e-15);
    EXPECT_NEAR(m.bulk_energy_per_site(), -0.900673, 1e-6);
    std::array<int, 3> sizes{8, 16, 32};
    EXPECT_NEAR(exact_limit_oracle(m, sizes), frozen, 1e-9);
}

TEST(LatticePair, ZeroPotentialCountsSites)
{
    LatticePairModel m({-1, 0.0});
    for (int n : {1, 3, 7})
    {
        Domain box = Domain::box(Box{{-0.5, -0.5, -0.5}, {n - 0.5, n - 0.5, n - 0.5}});
        EXPECT_EQ(m.energy(box).value, -static_cast<double>(n * n * n));
    }
}

TEST(LatticePair, CutoffWithinInradius)
{
    LatticePairModel m;
    EXPECT_NEAR(reference_inradius(), 0.130602, 1e-6);
    EXPECT_TRUE(m.cutoff_within_inradius(8));
    EXPECT_FALSE(m.cutoff_within_inradius(7));
}

TEST(LatticePair, DecompositionRegroupsExactly)
{
    LatticePairModel m;
    Domain omega = Domain::box(Box{{0, 0, 0}, {10, 10, 10}});
    auto frame = random_frame(4, 8);
    auto tiles = enumerate_intersecting(frame, omega.bbox().inflated(1e-6));
    auto d = decompose(m, omega, frame, tiles, {});
    auto whole = m.integer_form(omega);
    ASSERT_TRUE(whole && d.regrouped);
    EXPECT_EQ(d.regrouped->coeffs, whole->coeffs);
    EXPECT_EQ(d.s_value, 0.0);
    double e = m.energy(omega).value;
    EXPECT_NEAR(d.assembled(), e, 1e-9 * std::abs(e));

    double unordered = 0;
    for (auto const& p : d.pairs)
    {
        EXPECT_LT(p.i, p.j);
        unordered += p.value;
    }
    EXPECT_NEAR(d.ordered_pair_sum(), 2 * unordered, 1e-12);
    for (auto const& p : d.pairs)
    {
        EXPECT_EQ(d.pair_value(p.i, p.j), d.pair_value(p.j, p.i));
    }
}

//---------------------------------------------------------------------------//
// Gaussian free energy
//---------------------------------------------------------------------------//

TEST(Gaussian, EntropyClosedForms)
{
    double sigma = 0.5;
    double rho = 1e-3;
    double c = std::log(2 * kPi * std::numbers::e);
    std::vector<Vec3> one{{0, 0, 0}};
    EXPECT_NEAR(gaussian_entropy(one, sigma, rho), 0.5 * (c + std::log(1 + rho)), 1e-14);
    double dist = 0.7;
    std::vector<Vec3> two{{0, 0, 0}, {dist, 0, 0}};
    double k = std::exp(-dist * dist / (2 * sigma * sigma));
    double want = 0.5 * (2 * c + std::log((1 + rho) * (1 + rho) - k * k));
    EXPECT_NEAR(gaussian_entropy(two, sigma, rho), want, 1e-13);
    std::vector<Vec3> same{{1, 1, 1}, {1, 1, 1}};
    EXPECT_THROW(gaussian_entropy(same, sigma, 0.0), Error);
    EXPECT_EQ(gaussian_entropy({}, sigma, rho), 0.0);
}

TEST(Gaussian, DecompositionDefectIsNonpositive)
{
    auto m = make_model("gaussian");
    Domain omega = Domain::ball({0, 0, 0}, 2.5);
    auto frame = random_frame(11, 2);
    auto tiles = enumerate_intersecting(frame, omega.bbox().inflated(1e-6));
    auto d = decompose(*m, omega, frame, tiles, {});
    EXPECT_TRUE(d.pairs.empty());
    EXPECT_LE(d.s_value, 1e-12);
    double e = m->energy(omega).value;
    EXPECT_NEAR(d.assembled(), e, 1e-9 * std::abs(e));
}

TEST(Decompose, RequiresDecomposableModel)
{
    auto m = LocalFunctionalModel::sin2();
    std::vector<TileIndex> none;
    EXPECT_THROW(decompose(*m, Domain::ball({0, 0, 0}, 1), random_frame(1, 1), none, {}), Error);
}

//---------------------------------------------------------------------------//
// Audits
//---------------------------------------------------------------------------//

TEST(Audits, NormalizationHoldsForAllModels)
{
    for (auto const& name : model_names())
    {
        EXPECT_TRUE(audit_A1_normalization(*make_model(name)).pass) << name;
    }
}

TEST(Audits, StabilityDetectsBrokenFixture)
{
    auto suite = standard_domain_suite();
    Quality q{20000, 1};
    EXPECT_TRUE(audit_A2_stability(*make_model("local-sin"), suite, q).pass);
    EXPECT_TRUE(audit_A2_stability(*make_model("lattice"), suite, q).pass);
    std::vector<Domain> small{Domain::ball({0, 0, 0}, 2), Domain::lshape(1.5)};
    EXPECT_TRUE(audit_A2_stability(*make_model("gaussian"), small, q).pass);

    auto broken = audit_A2_stability(*make_model("broken-fixture"), suite, q);
    EXPECT_FALSE(broken.pass);
    ASSERT_NE(broken.worst(), nullptr);
    EXPECT_FALSE(broken.worst()->pass);
    EXPECT_NE(broken.witness().find("A2"), std::string::npos);
}

TEST(Audits, TranslationAverageMatchesOracle)
{
    auto m = LocalFunctionalModel::sin2();
    Domain cube = Domain::cube({0, 0, 0}, 0.3);
    std::vector<double> L{0.25, 0.5, 1, 2};
    auto rep = audit_A3_translation_average(*m, cube, L, 256, {4096, 7});
    ASSERT_EQ(rep.rows.size(), L.size());
    double a = std::sin(0.6 * kPi) / (1.2 * kPi);
    for (auto const& row : rep.rows)
    {
        double want = 0.5 - a * ball_cos_average(4 * kPi, row.radius);
        EXPECT_NEAR(row.average, want, 4 * row.std_error + 1e-4) << row.radius;
    }
    EXPECT_TRUE(rep.decreasing);
    EXPECT_THROW(audit_A3_translation_average(*m, cube, L, 8, {}), Error);
}

TEST(Audits, ContinuityAndContainment)
{
    auto m = make_model("lattice");
    Domain omega = Domain::ball({0, 0, 0}, 6);
    Domain sub = Domain::ball({0, 0, 0}, 4.5);
    EXPECT_TRUE(audit_A4_continuity(*m, omega, sub, m->kappa(), 0, 1, {}).pass);
    EXPECT_TRUE(audit_A4_continuity(*m, omega, omega, m->kappa(), 0, 1, {}).pass);
    EXPECT_THROW(audit_A4_continuity(*m, omega, Domain::ball({0, 0, 0}, 5.5), m->kappa(), 0, 1,
                                     {}),
                 Error);
}

TEST(Audits, SubaverageEqualityForVolume)
{
    auto m = LocalFunctionalModel::volume();
    Domain ball = Domain::ball({0, 0, 0}, 3);
    SubaverageOptions opt;
    opt.equality = true;
    auto rep = audit_A5_subaverage(*m, ball, 1, 50000, 5, opt);
    EXPECT_TRUE(rep.audit.pass) << rep.audit.witness();
    EXPECT_NEAR(rep.average, 36 * kPi, 3 * rep.average_se);
    EXPECT_DOUBLE_EQ(rep.regularized_volume, rep.volume);
    EXPECT_THROW(audit_A5_subaverage(*m, ball, 0.5, 100, 5), Error);
}

TEST(Audits, SubaverageRejectsBrokenFixture)
{
    auto m = make_model("broken-fixture");
    auto rep = audit_A5_subaverage(*m, Domain::ball({0, 0, 0}, 3), 1, 2000, 5);
    EXPECT_FALSE(rep.audit.pass);
    EXPECT_GT(rep.alpha_fitted, 0);
}

TEST(Audits, RegularizedVolume)
{
    Domain l = Domain::lshape(2);
    EXPECT_DOUBLE_EQ(regularized_volume(l, 56), 64);
    Domain b = Domain::ball({0, 0, 0}, 1);
    EXPECT_DOUBLE_EQ(regularized_volume(b, 4.0), 4.0);
}

TEST(Audits, A6LatticeExact)
{
    auto m = make_model("lattice");
    Domain omega = Domain::box(Box{{0, 0, 0}, {10, 10, 10}});
    auto rep = audit_A6(*m, omega, random_frame(2, 8), 16, 3);
    EXPECT_TRUE(rep.audit.pass) << rep.audit.witness();
    EXPECT_TRUE(rep.exact_regrouping);
    EXPECT_NEAR(rep.lower_slack, 0.0, 1e-12 * std::abs(rep.energy));
    EXPECT_NEAR(rep.upper_slack, 0.0, 1e-12 * std::abs(rep.energy));
    EXPECT_EQ(rep.regrouped_total, rep.energy);
    EXPECT_GT(rep.support_pairs_checked, 0u);
    EXPECT_GE(rep.cell_average, 0.0);
}

TEST(Audits, A6GaussianSandwich)
{
    auto m = make_model("gaussian");
    auto rep = audit_A6(*m, Domain::ball({0, 0, 0}, 3), random_frame(5, 2), 4, 3);
    EXPECT_TRUE(rep.audit.pass) << rep.audit.witness();
    EXPECT_NEAR(rep.lower_slack, 0, 1e-9);
}

TEST(Audits, A6RequiresDecomposer)
{
    auto m = make_model("local-sin");
    EXPECT_THROW(audit_A6(*m, Domain::ball({0, 0, 0}, 3), random_frame(5, 2), 4, 3), Error);
}

TEST(LimitOracle, AnalyticAndExtrapolated)
{
    std::array<int, 2> sizes{4, 8};
    EXPECT_EQ(exact_limit_oracle(*make_model("local-sin"), sizes), 0.5);
    auto res = exact_limit_oracle_detail(*make_model("local-const", {{"c", 2}}), sizes, {}, false);
    EXPECT_FALSE(res.analytic);
    EXPECT_NEAR(res.value, 2.0, 1e-12);
    std::array<int, 2> bad{8, 4};
    EXPECT_THROW(exact_limit_oracle(*make_model("lattice"), bad), Error);
}
