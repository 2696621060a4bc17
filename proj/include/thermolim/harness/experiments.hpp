#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "../models/audits.hpp"
#include "../motion.hpp"
#include "../tiling.hpp"
#include "records.hpp"

namespace thermolim
{
//! Per-parameter aggregate of a limit curve.
struct LimitCurveRow
{
    double param{0};
    double mean{0};
    double std_error{0};
    //! sup - inf over sampled motions (reference experiments).
    double spread{0};
    //! Largest per-sample standard error at this parameter.
    double noise{0};
    double residual{0};
};

struct LimitCurve
{
    std::string experiment;
    std::vector<ExperimentRecord> records;
    std::vector<LimitCurveRow> rows;
    double e_bar{0};
    double e_bar_se{0};
};

//! Spread non-increasing along the grid, up to the per-sample noise and rounding.
inline bool spread_non_increasing(LimitCurve const& c)
{
    for (std::size_t k = 0; k + 1 < c.rows.size(); ++k)
    {
        auto const& a = c.rows[k];
        auto const& b = c.rows[k + 1];
        double rounding = 1e-12 * std::max(std::abs(a.mean), std::abs(b.mean));
        if (b.spread > a.spread + a.noise + b.noise + rounding)
        {
            return false;
        }
    }
    return true;
}

//! Unit cube centered at the origin, the alternative reference set.
inline Polytope reference_cube() { return Polytope::box(Box::cube({0, 0, 0}, 0.5)); }

//---------------------------------------------------------------------------//
/*!
 * e_ell(g) = E(g ell ref) / |ell ref| for motions with translation uniform in
 * [0,1)^3 and Haar rotation.
 *
 * The limit estimate is the mean at the largest ell; residuals are
 * |mean(ell) - e_bar|.
 */
inline LimitCurve reference_limit_experiment(EnergyModel const& model,
                                             std::span<double const> ell_grid,
                                             std::size_t g_samples, Quality const& q,
                                             std::uint64_t seed,
                                             Polytope const& ref = reference_simplex(),
                                             std::string const& ref_name = "simplex")
{
    expect(!ell_grid.empty(), "ell grid must be nonempty");
    for (std::size_t k = 0; k < ell_grid.size(); ++k)
    {
        expect(ell_grid[k] > 0, "ell must be > 0");
        expect(k == 0 || ell_grid[k] > ell_grid[k - 1], "ell grid must be increasing");
    }
    expect(g_samples >= 1, "g_samples must be >= 1");
    LimitCurve curve;
    curve.experiment = "limit-ref";
    std::size_t items = ell_grid.size() * g_samples;
    auto recs = map_shards<ExperimentRecord>(items, [&](std::size_t item) {
        std::size_t l = item / g_samples;
        std::size_t i = item % g_samples;
        double ell = ell_grid[l];
        CounterRng rng(derive_seed(seed, l), Stream::experiment, i);
        Vec3 u = uniform3(rng);
        Rotation r = sample_rotation(rng);
        Domain d = Domain::polytope(apply(RigidMotion(r, u), ell, ref));
        std::uint64_t s = derive_seed(seed, l, i);
        auto e = model.energy(d, {q.samples, s});
        double vol = ref.exact_volume() * ell * ell * ell;
        ExperimentRecord rec;
        rec.experiment = curve.experiment;
        rec.model = model.name();
        rec.params = model.params();
        rec.domain = ref_name;
        rec.param_name = "ell";
        rec.param = ell;
        rec.sample = i;
        rec.value = e.value;
        rec.std_error = e.std_error;
        rec.volume = vol;
        rec.normalized = e.value / vol;
        rec.seed = s;
        return rec;
    });
    for (std::size_t l = 0; l < ell_grid.size(); ++l)
    {
        Moments m;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        double noise = 0;
        for (std::size_t i = 0; i < g_samples; ++i)
        {
            auto const& r = recs[l * g_samples + i];
            m.add(r.normalized);
            lo = std::min(lo, r.normalized);
            hi = std::max(hi, r.normalized);
            noise = std::max(noise, r.std_error / r.volume);
        }
        curve.rows.push_back({ell_grid[l], m.mean(), m.stderr_of_mean(), hi - lo, noise, 0.0});
    }
    curve.e_bar = curve.rows.back().mean;
    curve.e_bar_se = curve.rows.back().std_error;
    for (auto& row : curve.rows)
    {
        row.residual = std::abs(row.mean - curve.e_bar);
    }
    curve.records = std::move(recs);
    return curve;
}

//---------------------------------------------------------------------------//
struct GeneralOptions
{
    EtaClass eta{24, 1, 0.2};
    std::vector<double> t_grid{0.01, 0.02, 0.05, 0.1};
    std::size_t regularity_samples{200000};
    //! Bound on diam(domain) |domain|^{-1/3} along the sequence.
    double diameter_ratio_bound{4};
    //! Limit to compare the terminal value against.
    std::optional<double> e_bar;
};

struct GeneralLimitResult
{
    LimitCurve curve;
    std::vector<RegularityReport> regularity;
    std::vector<double> diameter_ratio;
    double terminal{0};
    double terminal_se{0};
    //! |terminal - e_bar| / |e_bar| (absolute when e_bar = 0).
    double gap{std::numeric_limits<double>::quiet_NaN()};
};

/*!
 * E(domain_n) / |domain_n| along a sequence whose members pass the
 * regularity audit and the diameter-ratio bound.
 */
inline GeneralLimitResult general_limit_experiment(EnergyModel const& model,
                                                   std::span<Domain const> seq,
                                                   Quality const& q, std::uint64_t seed,
                                                   GeneralOptions const& opt = {})
{
    expect(!seq.empty(), "domain sequence must be nonempty");
    GeneralLimitResult res;
    res.curve.experiment = "limit-general";
    for (std::size_t n = 0; n < seq.size(); ++n)
    {
        auto const& d = seq[n];
        auto reg = eta_regularity_audit(d, opt.eta, opt.t_grid, opt.regularity_samples,
                                        derive_seed(seed, 100, n));
        expect(reg.pass, "sequence not in 𝓡");
        double vol = volume_value(d, opt.regularity_samples, derive_seed(seed, 200, n));
        double ratio = diameter(d) / std::cbrt(vol);
        expect(ratio <= opt.diameter_ratio_bound, "diameter ratio exceeds bound");
        res.regularity.push_back(std::move(reg));
        res.diameter_ratio.push_back(ratio);

        std::uint64_t s = derive_seed(seed, n);
        auto e = model.energy(d, {q.samples, s});
        ExperimentRecord rec;
        rec.experiment = res.curve.experiment;
        rec.model = model.name();
        rec.params = model.params();
        rec.domain = d.describe();
        rec.param_name = "n";
        rec.param = static_cast<double>(n);
        rec.value = e.value;
        rec.std_error = e.std_error;
        rec.volume = vol;
        rec.normalized = e.value / vol;
        rec.seed = s;
        res.curve.records.push_back(rec);
        res.curve.rows.push_back({rec.param, rec.normalized, e.std_error / vol, 0.0,
                                  e.std_error / vol, 0.0});
    }
    res.terminal = res.curve.rows.back().mean;
    res.terminal_se = res.curve.rows.back().std_error;
    res.curve.e_bar = opt.e_bar.value_or(res.terminal);
    for (auto& row : res.curve.rows)
    {
        row.residual = std::abs(row.mean - res.curve.e_bar);
    }
    if (opt.e_bar)
    {
        double scale = *opt.e_bar == 0 ? 1.0 : std::abs(*opt.e_bar);
        res.gap = std::abs(res.terminal - *opt.e_bar) / scale;
    }
    return res;
}

//! Balls of the given radii about the origin.
inline std::vector<Domain> ball_sequence(std::span<double const> radii)
{
    std::vector<Domain> out;
    for (double r : radii)
    {
        out.push_back(Domain::ball({0, 0, 0}, r));
    }
    return out;
}

//! L-shapes [0,2s]^3 minus [s,2s]^3 shifted by (-1/2,-1/2,-1/2), so that
//! faces fall between lattice planes.
inline std::vector<Domain> lshape_sequence(std::span<double const> sizes)
{
    std::vector<Domain> out;
    for (double s : sizes)
    {
        out.push_back(apply(RigidMotion::translation({-0.5, -0.5, -0.5}), 1.0, Domain::lshape(s)));
    }
    return out;
}

//! Scaled reference simplices n ref about the origin.
inline std::vector<Domain> simplex_sequence(std::span<double const> scales,
                                            RigidMotion const& g = {})
{
    std::vector<Domain> out;
    for (double s : scales)
    {
        out.push_back(Domain::polytope(apply(g, s, reference_simplex())));
    }
    return out;
}

//---------------------------------------------------------------------------//
struct LowerBoundOptions
{
    std::size_t rotations{64};
    std::size_t translations{16};
    //! Radius of the translation-averaging ball.
    double ball_radius{4};
    //! Shell thickness in units of ell.
    double shell_factor{1 + std::sqrt(3.0) / 2};
    //! Upper bound on ell |domain|^{-1/3}.
    double guard{0.5};
    std::size_t samples{200000};
    std::size_t shell_samples{200000};
};

struct LowerBoundReport
{
    double energy_density{0};
    double energy_density_se{0};
    double e_av{0};
    double e_av_se{0};
    double margin{0};
    double margin_se{0};
    double shell_fraction{0};
    double shell_fraction_se{0};
    //! |margin| <= 3 margin_se.
    bool approx_zero{false};
    bool pass{false};
};

/*!
 * Compares E(domain)/|domain| with the rotation-averaged translation
 * average e_av of E(R ell ref + u)/|ell ref|, u uniform in B(0, L).
 *
 * Passes iff the margin is at least -(shell fraction + 3 stderr), the shell
 * being { x in domain : d(x, boundary) <= a ell }.
 */
inline LowerBoundReport lower_bound_diagnostic(EnergyModel const& model, Domain const& omega,
                                               double ell, std::uint64_t seed,
                                               LowerBoundOptions const& opt = {},
                                               Polytope const& ref = reference_simplex())
{
    expect(ell > 0, "ell must be > 0");
    expect(!omega.is_empty(), "domain must be nonempty");
    double vol = volume_value(omega, opt.samples, derive_seed(seed, 1));
    expect(ell / std::cbrt(vol) < opt.guard, "lower-bound guard violated");
    LowerBoundReport rep;
    auto e = model.energy(omega, {opt.samples, derive_seed(seed, 2)});
    rep.energy_density = e.value / vol;
    rep.energy_density_se = e.std_error / vol;

    double cell = ref.exact_volume() * ell * ell * ell;
    Domain ball = Domain::ball({0, 0, 0}, opt.ball_radius);
    std::size_t n = opt.rotations * opt.translations;
    auto values = map_shards<double>(opt.rotations, [&](std::size_t i) {
        CounterRng rng(seed, Stream::experiment, i);
        Rotation r = sample_rotation(rng);
        double acc = 0;
        for (std::size_t k = 0; k < opt.translations; ++k)
        {
            Vec3 u = ball.map_uniform(uniform3(rng));
            Domain piece = Domain::polytope(apply(RigidMotion(r, u), ell, ref));
            acc += model.energy(piece, {std::max<std::size_t>(opt.samples / n, 16),
                                        derive_seed(seed, 3, i, k)})
                       .value;
        }
        return acc / static_cast<double>(opt.translations) / cell;
    });
    Moments m;
    for (double v : values)
    {
        m.add(v);
    }
    rep.e_av = m.mean();
    rep.e_av_se = m.stderr_of_mean();

    std::size_t near = sharded_count(opt.shell_samples, [&](std::size_t i) {
        CounterRng rng(derive_seed(seed, 4), Stream::sausage, i);
        auto x = detail::sample_in(omega, rng);
        return x && omega.near_boundary(*x, opt.shell_factor * ell);
    });
    auto frac = detail::hit_or_miss(near, opt.shell_samples, 1.0, seed);
    rep.shell_fraction = frac.value;
    rep.shell_fraction_se = frac.std_error;

    rep.margin = rep.energy_density - rep.e_av;
    rep.margin_se = std::hypot(rep.energy_density_se, rep.e_av_se);
    rep.approx_zero = std::abs(rep.margin) <= 3 * rep.margin_se;
    rep.pass = rep.margin >= -(rep.shell_fraction + 3 * rep.margin_se);
    return rep;
}

//---------------------------------------------------------------------------//
struct A6ImpliesA5Report
{
    double lhs{0};
    double lhs_se{0};
    //! Quotient-cell average of the summed tile energies.
    double rhs_a6{0};
    double rhs_a6_se{0};
    //! Direct sliding average of E(domain cap g ell ref).
    double rhs_a5{0};
    double rhs_a5_se{0};
    //! lhs - rhs_a6.
    double margin{0};
    double margin_se{0};
    //! rhs_a6 - rhs_a5.
    double consistency{0};
    double consistency_se{0};
    bool consistent{true};
    bool pass{true};
};

/*!
 * Both sides of the sliding-average lower bound, with the right side
 * assembled from tile energies averaged over the quotient cell
 * (translation ell R w, w in [0,1)^3, Haar R) and, independently, by the
 * direct sliding average.
 */
inline A6ImpliesA5Report a6_implies_a5_diagnostic(EnergyModel const& model, Domain const& omega,
                                                  double ell, std::size_t cell_samples,
                                                  std::uint64_t seed,
                                                  std::size_t motions = 20000,
                                                  Quality const& q = {})
{
    expect(model.decomposer() != nullptr, "model not decomposable");
    expect(cell_samples >= 2, "at least two cell samples required");
    A6ImpliesA5Report rep;
    if (omega.is_empty())
    {
        return rep;
    }
    auto e = model.energy(omega, {q.samples, derive_seed(seed, 1)});
    rep.lhs = e.value;
    rep.lhs_se = e.std_error;
    auto values = map_shards<double>(cell_samples, [&](std::size_t i) {
        CounterRng rng(seed, Stream::a6_motion, i);
        Vec3 w = uniform3(rng);
        Rotation r = sample_rotation(rng);
        TilingFrame f{RigidMotion(r, r * (w * ell)), ell, 0.0};
        auto tiles = enumerate_intersecting(f, omega.bbox().inflated(1e-6 * ell));
        return decompose(model, omega, f, tiles, {q.samples, derive_seed(seed, 2, i)}).tile_sum();
    });
    Moments m;
    for (double v : values)
    {
        m.add(v);
    }
    rep.rhs_a6 = m.mean();
    rep.rhs_a6_se = m.stderr_of_mean();
    auto direct = sliding_average(model, omega, reference_simplex(), ell, motions,
                                  derive_seed(seed, 3), 16);
    rep.rhs_a5 = direct.value;
    rep.rhs_a5_se = direct.std_error;
    rep.margin = rep.lhs - rep.rhs_a6;
    rep.margin_se = std::hypot(rep.lhs_se, rep.rhs_a6_se);
    rep.consistency = rep.rhs_a6 - rep.rhs_a5;
    rep.consistency_se = std::hypot(rep.rhs_a6_se, rep.rhs_a5_se);
    double tol = 1e-9 * std::max(1.0, std::abs(rep.lhs));
    rep.consistent = std::abs(rep.consistency) <= 3 * rep.consistency_se + tol;
    rep.pass = rep.margin >= -(3 * rep.margin_se + tol);
    return rep;
}

}  // namespace thermolim
