#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "../motion.hpp"
#include "energy_model.hpp"

namespace thermolim
{
//---------------------------------------------------------------------------//
// Audit reports
//---------------------------------------------------------------------------//

//! One checked inequality: pass iff margin >= -3 std_error (or >= 0 if exact).
struct AuditRow
{
    std::string label;
    double value{0};
    double bound{0};
    double margin{0};
    double std_error{0};
    bool pass{true};
};

struct AuditReport
{
    std::string check;
    //! Class of domains the audited assumption is scoped to.
    std::string domain_class;
    std::vector<AuditRow> rows;
    bool pass{true};

    void add(AuditRow row)
    {
        pass = pass && row.pass;
        rows.push_back(std::move(row));
    }

    //! Failing row with the most negative margin, else the tightest row.
    AuditRow const* worst() const
    {
        AuditRow const* w = nullptr;
        for (auto const& r : rows)
        {
            auto key = [](AuditRow const& x) {
                return std::pair{x.pass ? 1 : 0, x.margin};
            };
            if (!w || key(r) < key(*w))
            {
                w = &r;
            }
        }
        return w;
    }

    std::string witness() const
    {
        auto const* w = worst();
        if (!w)
        {
            return check + ": no rows";
        }
        std::ostringstream os;
        os.precision(10);
        os << check << " [" << w->label << "] value=" << w->value << " bound=" << w->bound
           << " margin=" << w->margin << " stderr=" << w->std_error;
        return os.str();
    }
};

namespace detail
{
//! Row for "value >= bound" with combined standard error.
inline AuditRow lower_row(std::string label, double value, double bound, double se,
                          double exact_tol = 1e-9)
{
    AuditRow r{std::move(label), value, bound, value - bound, se, true};
    if (se > 0)
    {
        r.pass = r.margin >= -3 * se;
    }
    else
    {
        r.pass = r.margin >= -exact_tol * std::max(1.0, std::abs(bound));
    }
    return r;
}

//! Row for "|value - bound| <= 3 se".
inline AuditRow equal_row(std::string label, double value, double bound, double se,
                          double exact_tol = 1e-9)
{
    AuditRow r{std::move(label), value, bound, -std::abs(value - bound), se, true};
    if (se > 0)
    {
        r.pass = -r.margin <= 3 * se;
    }
    else
    {
        r.pass = -r.margin <= exact_tol * std::max(1.0, std::abs(bound));
    }
    return r;
}

inline std::uint64_t child(Quality const& q, std::uint64_t label)
{
    return derive_seed(q.seed, label);
}
}  // namespace detail

//---------------------------------------------------------------------------//
// (A1), (A2)
//---------------------------------------------------------------------------//

inline AuditReport audit_A1_normalization(EnergyModel const& model)
{
    AuditReport rep{"A1", "empty domain", {}, true};
    auto e = model.energy(Domain::empty());
    AuditRow row{"empty", e.value, 0.0, -std::abs(e.value), e.std_error, e.value == 0.0};
    rep.add(row);
    return rep;
}

//! Balls of radius 2, 5, 10, two boxes and two L-shapes.
inline std::vector<Domain> standard_domain_suite()
{
    return {Domain::ball({0, 0, 0}, 2),
            Domain::ball({0.3, 0.1, 0.2}, 5),
            Domain::ball({0, 0, 0}, 10),
            Domain::box(Box{{0, 0, 0}, {4, 4, 4}}),
            Domain::box(Box{{-1.5, -2.5, -3.5}, {1.5, 2.5, 3.5}}),
            Domain::lshape(2),
            Domain::lshape(4)};
}

/*!
 * Stability margins E + kappa |domain| over a suite of domains.
 */
inline AuditReport audit_A2_stability(EnergyModel const& model,
                                      std::span<Domain const> suite, Quality const& q)
{
    expect(!suite.empty(), "domain suite must be nonempty");
    AuditReport rep{"A2", "bounded domains", {}, true};
    double kappa = model.kappa();
    for (std::size_t k = 0; k < suite.size(); ++k)
    {
        auto const& d = suite[k];
        auto e = model.energy(d, {q.samples, detail::child(q, 2 * k)});
        auto v = volume(d, std::max<std::size_t>(q.samples, 1), detail::child(q, 2 * k + 1));
        double se = std::hypot(e.std_error, kappa * v.std_error);
        rep.add(detail::lower_row(d.describe(), e.value, -kappa * v.value, se));
    }
    return rep;
}

//---------------------------------------------------------------------------//
// (A3)
//---------------------------------------------------------------------------//

struct TranslationAverageRow
{
    double radius{0};
    double average{0};
    double std_error{0};
    double deviation{0};
};

struct TranslationAverageReport
{
    std::vector<TranslationAverageRow> rows;
    //! Deviation non-increasing in L up to three combined standard errors.
    bool decreasing{true};
};

/*!
 * Ball averages of E(domain + u) / |domain| over u in B(0, L).
 *
 * Translations follow randomized Kronecker points mapped into the ball; the
 * standard error comes from 16 independently shifted replicates.
 */
inline TranslationAverageReport
audit_A3_translation_average(EnergyModel const& model, Domain const& omega,
                             std::span<double const> L_grid, std::size_t translations,
                             Quality const& q)
{
    expect(!L_grid.empty(), "L grid must be nonempty");
    expect(std::is_sorted(L_grid.begin(), L_grid.end())
               && std::adjacent_find(L_grid.begin(), L_grid.end()) == L_grid.end(),
           "L grid must be increasing");
    expect(L_grid.front() > 0, "L must be > 0");
    expect(translations >= 16, "at least 16 translations required");
    double vol = volume(omega, std::max<std::size_t>(q.samples, 1), detail::child(q, 1)).value;
    expect(vol > 0, "domain has zero volume");
    TranslationAverageReport rep;
    constexpr std::size_t reps = 16;
    std::size_t per = translations / reps;
    for (std::size_t l = 0; l < L_grid.size(); ++l)
    {
        Domain ball = Domain::ball({0, 0, 0}, L_grid[l]);
        auto values = map_shards<double>(reps, [&](std::size_t r) {
            CounterRng rng(q.seed, Stream::a3_translation, r);
            Vec3 shift = uniform3(rng);
            double acc = 0;
            for (std::size_t k = 0; k < per; ++k)
            {
                Vec3 u = ball.map_uniform(detail::r3_point(k + 1, shift));
                Domain moved = apply(RigidMotion::translation(u), 1.0, omega);
                acc += model.energy(moved, {q.samples, derive_seed(q.seed, l, r, k)}).value;
            }
            return acc / static_cast<double>(per) / vol;
        });
        Moments m;
        for (double v : values)
        {
            m.add(v);
        }
        rep.rows.push_back({L_grid[l], m.mean(), m.stderr_of_mean(), 0.0});
    }
    auto const& last = rep.rows.back();
    for (auto& row : rep.rows)
    {
        row.deviation = std::abs(row.average - last.average);
    }
    for (std::size_t k = 0; k + 2 < rep.rows.size(); ++k)
    {
        auto const& a = rep.rows[k];
        auto const& b = rep.rows[k + 1];
        double tol = 3 * std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error
                                   + 2 * last.std_error * last.std_error);
        if (b.deviation > a.deviation + tol)
        {
            rep.decreasing = false;
        }
    }
    return rep;
}

//---------------------------------------------------------------------------//
// (A4)
//---------------------------------------------------------------------------//

namespace detail
{
//! Uniform point of the domain: mapped when possible, else bbox rejection.
inline std::optional<Vec3> sample_in(Domain const& d, CounterRng& rng, int attempts = 64)
{
    if (d.has_uniform_map())
    {
        return d.map_uniform(uniform3(rng));
    }
    Box b = d.bbox();
    for (int k = 0; k < attempts; ++k)
    {
        Vec3 x = b.at(uniform3(rng));
        if (d.contains(x))
        {
            return x;
        }
    }
    return std::nullopt;
}
}  // namespace detail

/*!
 * Continuity check E(omega) <= E(sub) + kappa |omega \ sub| + |omega| alpha.
 *
 * Points of `sub` are sampled to confirm it lies in `omega` at boundary
 * distance greater than delta.
 */
inline AuditReport audit_A4_continuity(EnergyModel const& model, Domain const& omega,
                                       Domain const& omega_sub, double kappa,
                                       double alpha_budget, double delta,
                                       Quality const& q, std::size_t containment_samples = 20000)
{
    expect(kappa > 0, "kappa must be > 0");
    expect(alpha_budget >= 0, "alpha budget must be >= 0");
    expect(delta >= 0, "delta must be >= 0");
    AuditReport rep{"A4", "regular domains and inner subsets", {}, true};
    if (!omega_sub.same_as(omega) && !omega_sub.is_empty())
    {
        std::size_t bad = sharded_count(containment_samples, [&](std::size_t i) {
            CounterRng rng(q.seed, Stream::containment, i);
            auto x = detail::sample_in(omega_sub, rng);
            if (!x)
            {
                return false;
            }
            if (!omega.contains(*x))
            {
                return true;
            }
            if (omega.has_exact_distance())
            {
                return !(omega.boundary_distance(*x) > delta);
            }
            return omega.near_boundary(*x, delta);
        });
        expect(bad == 0, "containment violated");
    }
    auto e = model.energy(omega, {q.samples, detail::child(q, 1)});
    auto es = omega_sub.same_as(omega) ? e : model.energy(omega_sub, {q.samples, detail::child(q, 2)});
    auto v = volume(omega, std::max<std::size_t>(q.samples, 1), detail::child(q, 3));
    double vs_val = 0;
    double vs_se = 0;
    if (omega_sub.same_as(omega))
    {
        vs_val = v.value;
        vs_se = v.std_error;
    }
    else if (!omega_sub.is_empty())
    {
        auto vs = volume(omega_sub, std::max<std::size_t>(q.samples, 1), detail::child(q, 4));
        vs_val = vs.value;
        vs_se = vs.std_error;
    }
    double rhs = es.value + kappa * (v.value - vs_val) + v.value * alpha_budget;
    double se = std::sqrt(e.std_error * e.std_error + es.std_error * es.std_error
                          + kappa * kappa * (v.std_error * v.std_error + vs_se * vs_se));
    // margin = rhs - E(omega)
    AuditRow row = detail::lower_row(omega_sub.describe() + " in " + omega.describe(), rhs,
                                     e.value, se);
    rep.add(row);
    return rep;
}

//---------------------------------------------------------------------------//
// (A5)
//---------------------------------------------------------------------------//

struct SubaverageOptions
{
    //! Configured alpha(ell) budget.
    double alpha{0};
    //! Assert equality instead of the one-sided bound.
    bool equality{false};
    //! Samples per clipped energy evaluation.
    std::size_t inner_samples{16};
    //! Samples for the full-domain energy and volume.
    std::size_t outer_samples{200000};
};

struct SubaverageReport
{
    AuditReport audit;
    double energy{0};
    double energy_se{0};
    double average{0};
    double average_se{0};
    double volume{0};
    double regularized_volume{0};
    //! Smallest alpha >= 0 making the bound hold at the point estimates.
    double alpha_fitted{0};
    //! E - [(1 - alpha) avg - |omega|_r alpha] at the configured alpha.
    double slack{0};
};

/*!
 * G-average (1/|ell ref|) integral of E(omega cap g(ell ref)) over motions.
 *
 * Translations are uniform in the bounding box of omega inflated by the
 * enclosing radius of ell * ref; rotations are Haar.
 */
inline MeasureEstimate sliding_average(EnergyModel const& model, Domain const& omega,
                                       Polytope const& ref, double ell, std::size_t motions,
                                       std::uint64_t seed, std::size_t inner_samples)
{
    expect(ell > 0, "ell must be > 0");
    expect(motions >= 2, "at least two motions required");
    if (omega.is_empty())
    {
        return {0.0, 0.0, motions, seed, true};
    }
    double rho = ell * ref.circumradius_about_origin();
    Box region = omega.bbox().inflated(rho);
    double cell = ref.exact_volume() * ell * ell * ell;
    Moments m = sharded_moments(motions, [&](std::size_t i) {
        CounterRng rng(seed, Stream::a5_motion, i);
        Vec3 u = region.at(uniform3(rng));
        Rotation r = sample_rotation(rng);
        Domain piece = Domain::intersection(
            omega, Domain::polytope(apply(RigidMotion(r, u), ell, ref)));
        return model.energy(piece, {inner_samples, derive_seed(seed, i)}).value;
    });
    double scale = region.volume() / cell;
    return {scale * m.mean(), scale * m.stderr_of_mean(), motions, seed, false};
}

inline SubaverageReport audit_A5_subaverage(EnergyModel const& model, Domain const& omega,
                                            double ell, std::size_t motions,
                                            std::uint64_t seed,
                                            SubaverageOptions const& opt = {},
                                            Polytope const& ref = reference_simplex())
{
    expect(ell >= 1, "ell must be >= 1");
    expect(opt.alpha >= 0 && opt.alpha < 1, "alpha must lie in [0, 1)");
    SubaverageReport rep;
    rep.audit = {"A5", "regular domains", {}, true};
    auto avg = sliding_average(model, omega, ref, ell, motions, seed, opt.inner_samples);
    auto e = model.energy(omega, {opt.outer_samples, derive_seed(seed, 1)});
    double vol = volume_value(omega, opt.outer_samples, derive_seed(seed, 2));
    rep.energy = e.value;
    rep.energy_se = e.std_error;
    rep.average = avg.value;
    rep.average_se = avg.std_error;
    rep.volume = vol;
    rep.regularized_volume = regularized_volume(omega, vol);
    double se = std::hypot(e.std_error, avg.std_error);
    double denom = avg.value + rep.regularized_volume;
    rep.alpha_fitted = denom > 0 ? std::max(0.0, (avg.value - e.value) / denom) : 0.0;
    double bound = (1 - opt.alpha) * avg.value - rep.regularized_volume * opt.alpha;
    rep.slack = e.value - bound;
    std::ostringstream label;
    label << omega.describe() << " ell=" << ell;
    if (opt.equality)
    {
        rep.audit.add(detail::equal_row(label.str(), e.value, avg.value, se));
    }
    else
    {
        rep.audit.add(detail::lower_row(label.str(), e.value, bound,
                                        std::hypot(e.std_error, (1 - opt.alpha) * avg.std_error)));
    }
    return rep;
}

//---------------------------------------------------------------------------//
// (A6)
//---------------------------------------------------------------------------//

struct A6Options
{
    //! Error budget per unit volume in the sandwich and average checks.
    double budget{0};
    //! Random whole-tile subsets checked against the upper bound.
    std::size_t subset_trials{4};
    Quality quality{};
};

struct A6Report
{
    AuditReport audit;
    double energy{0};
    double assembled{0};
    //! E - assembled (lower bound side) and assembled - E (upper side).
    double lower_slack{0};
    double upper_slack{0};
    //! Integer tallies of the regrouped decomposition equal those of E.
    bool exact_regrouping{false};
    double regrouped_total{0};
    std::size_t tiles{0};
    double cell_average{0};
    double cell_average_se{0};
    double min_cell_sample{0};
    std::size_t support_pairs_checked{0};
};

namespace detail
{
inline std::vector<TileIndex> covering_tiles(TilingFrame const& frame, Domain const& omega)
{
    if (omega.is_empty())
    {
        return {};
    }
    return enumerate_intersecting(frame, omega.bbox().inflated(1e-6 * frame.ell));
}

//! Tiles certified to miss omega (exact distance from the tile centroid).
inline bool tile_misses(Domain const& omega, TilingFrame const& frame, TileIndex const& mu)
{
    auto v = tile_vertices(frame, mu);
    Vec3 c = (v[0] + v[1] + v[2] + v[3]) * 0.25;
    double r = 0;
    for (auto const& p : v)
    {
        r = std::max(r, norm(p - c));
    }
    Box b = Box::empty_box();
    for (auto const& p : v)
    {
        b.expand(p);
    }
    Box ob = omega.bbox();
    for (int i = 0; i < 3; ++i)
    {
        if (b.hi[i] < ob.lo[i] || b.lo[i] > ob.hi[i])
        {
            return true;
        }
    }
    if (!omega.has_exact_distance() || omega.contains(c))
    {
        return false;
    }
    return omega.boundary_distance(c) > r * (1 + 1e-9);
}
}  // namespace detail

/*!
 * Executable check of the local energy decomposition.
 *
 * (i) Sandwich: on the tiles covering omega, the assembled value
 * sum E_mu + (1/2) sum_{mu != nu} I - s is compared with E(omega) on both
 * sides, and random whole-tile subsets are checked against the energy of
 * omega clipped to their union. (ii) The ordered pair sum averaged over the
 * fundamental cell (translations ell R w, w in [0,1)^3, Haar R) is bounded
 * below by -|omega| budget. (iii) Tiles certified to miss omega interact with
 * value exactly zero.
 */
inline A6Report audit_A6(EnergyModel const& model, Domain const& omega,
                         TilingFrame const& frame, std::size_t cell_samples,
                         std::uint64_t seed, A6Options const& opt = {})
{
    expect(model.decomposer() != nullptr, "model not decomposable");
    frame.validate();
    A6Report rep;
    rep.audit = {"A6", "regular domains", {}, true};
    Quality q{opt.quality.samples, derive_seed(seed, 1)};
    double vol = volume_value(omega, std::max<std::size_t>(q.samples, 1), derive_seed(seed, 2));
    double budget = vol * opt.budget;

    // (i) sandwich on the full cover
    auto cover = detail::covering_tiles(frame, omega);
    // a ring of far tiles that certainly miss omega
    std::vector<TileIndex> far;
    if (!cover.empty())
    {
        auto hi = cover.back().cell;
        for (auto const& t : cover)
        {
            for (int i = 0; i < 3; ++i)
            {
                hi[i] = std::max(hi[i], t.cell[i]);
            }
        }
        far.push_back({{hi[0] + 2, hi[1], hi[2]}, 0});
        far.push_back({{hi[0], hi[1] + 2, hi[2]}, 5});
        far.push_back({{hi[0] + 2, hi[1] + 2, hi[2] + 2}, 11});
    }
    std::vector<TileIndex> with_far = cover;
    with_far.insert(with_far.end(), far.begin(), far.end());
    auto d = decompose(model, omega, frame, with_far, q);
    rep.tiles = cover.size();
    auto e = model.energy(omega, q);
    rep.energy = e.value;
    rep.assembled = d.assembled();
    rep.lower_slack = e.value - rep.assembled;
    rep.upper_slack = rep.assembled - e.value;
    if (auto form = model.integer_form(omega); form && d.regrouped)
    {
        rep.exact_regrouping = form->coeffs == d.regrouped->coeffs;
        rep.regrouped_total = d.regrouped->evaluate();
        rep.audit.add({"regrouping tallies", rep.regrouped_total, e.value,
                       rep.regrouped_total == e.value ? 0.0 : -std::abs(rep.regrouped_total - e.value),
                       0.0, rep.exact_regrouping && rep.regrouped_total == e.value});
    }
    double tol = 1e-9 * std::max(1.0, std::abs(e.value));
    rep.audit.add(detail::lower_row("lower bound, full cover", e.value, rep.assembled - budget,
                                    e.std_error, tol));
    rep.audit.add(detail::lower_row("upper bound, full cover", rep.assembled + budget, e.value,
                                    e.std_error, tol));

    for (std::size_t t = 0; t < opt.subset_trials && !cover.empty(); ++t)
    {
        CounterRng rng(seed, Stream::a6_motion, 1000000 + t);
        std::vector<TileIndex> sub;
        for (auto const& mu : cover)
        {
            if (rng.uniform() < 0.5)
            {
                sub.push_back(mu);
            }
        }
        auto ds = decompose(model, omega, frame, sub, q);
        Domain region = sub.empty() ? Domain::empty()
                                    : Domain::intersection(omega, Domain(std::make_shared<TileUnionShape>(frame, sub)));
        auto er = model.energy(region, {q.samples, derive_seed(seed, 3, t)});
        double rv = region.is_empty() ? 0.0 : volume_value(region, std::max<std::size_t>(q.samples, 1), derive_seed(seed, 4, t));
        std::ostringstream label;
        label << "upper bound, subset " << t << " (" << sub.size() << " tiles)";
        rep.audit.add(detail::lower_row(label.str(), ds.assembled() + rv * opt.budget, er.value,
                                        er.std_error, tol));
    }

    // (iii) support: tiles missing omega have vanishing rows
    std::size_t checked = 0;
    bool zeros = true;
    for (std::size_t a = 0; a < d.tiles.size(); ++a)
    {
        if (!detail::tile_misses(omega, frame, d.tiles[a]))
        {
            continue;
        }
        for (std::size_t b = 0; b < d.tiles.size(); ++b)
        {
            if (a != b)
            {
                ++checked;
                zeros = zeros && d.pair_value(a, b) == 0.0;
            }
        }
    }
    rep.support_pairs_checked = checked;
    rep.audit.add({"support zeros", static_cast<double>(checked), 0.0, 0.0, 0.0, zeros});

    // (ii) fundamental-cell average of the ordered pair sum
    if (cell_samples > 0)
    {
        auto values = map_shards<double>(cell_samples, [&](std::size_t i) {
            CounterRng rng(seed, Stream::a6_motion, i);
            Vec3 w = uniform3(rng);
            Rotation r = sample_rotation(rng);
            TilingFrame fi{RigidMotion(r, r * (w * frame.ell)), frame.ell, frame.tau};
            auto tiles = detail::covering_tiles(fi, omega);
            return decompose(model, omega, fi, tiles, {q.samples, derive_seed(seed, 5, i)})
                .ordered_pair_sum();
        });
        Moments m;
        rep.min_cell_sample = std::numeric_limits<double>::infinity();
        for (double v : values)
        {
            m.add(v);
            rep.min_cell_sample = std::min(rep.min_cell_sample, v);
        }
        rep.cell_average = m.mean();
        rep.cell_average_se = m.stderr_of_mean();
        rep.audit.add(detail::lower_row("interaction cell average", rep.cell_average, 0.0 - budget,
                                        rep.cell_average_se));
    }
    return rep;
}

//---------------------------------------------------------------------------//
// Limit oracle
//---------------------------------------------------------------------------//

struct LimitOracleResult
{
    double value{0};
    bool analytic{false};
    std::vector<int> sizes;
    std::vector<double> per_volume;
    std::vector<double> per_volume_se;
};

/*!
 * Infinite-volume energy per volume from boxes [-1/2, n - 1/2]^3.
 *
 * The last two sizes are extrapolated linearly in 1/n. Residuals against the
 * extrapolated value must shrink in magnitude with n.
 */
inline LimitOracleResult exact_limit_oracle_detail(EnergyModel const& model,
                                                   std::span<int const> sizes,
                                                   Quality const& q = {},
                                                   bool use_analytic = true)
{
    LimitOracleResult res;
    if (use_analytic)
    {
        if (auto v = model.exact_limit())
        {
            res.value = *v;
            res.analytic = true;
            return res;
        }
    }
    expect(sizes.size() >= 2, "at least two box sizes required");
    for (std::size_t k = 0; k < sizes.size(); ++k)
    {
        expect(sizes[k] >= 1, "box sizes must be >= 1");
        expect(k == 0 || sizes[k] > sizes[k - 1], "box sizes must increase");
        double n = sizes[k];
        Domain box = Domain::box(Box{{-0.5, -0.5, -0.5}, {n - 0.5, n - 0.5, n - 0.5}});
        auto e = model.energy(box, {q.samples, derive_seed(q.seed, k)});
        res.sizes.push_back(sizes[k]);
        res.per_volume.push_back(e.value / (n * n * n));
        res.per_volume_se.push_back(e.std_error / (n * n * n));
    }
    std::size_t m = sizes.size();
    double n1 = sizes[m - 2];
    double n2 = sizes[m - 1];
    res.value = (n2 * res.per_volume[m - 1] - n1 * res.per_volume[m - 2]) / (n2 - n1);
    for (std::size_t k = 0; k + 1 < m; ++k)
    {
        double r0 = std::abs(res.per_volume[k] - res.value);
        double r1 = std::abs(res.per_volume[k + 1] - res.value);
        double tol = 1e-9 * std::max(1.0, std::abs(res.value))
                     + 3 * (res.per_volume_se[k] + res.per_volume_se[k + 1]);
        expect(r1 <= r0 + tol, "extrapolation unstable");
    }
    return res;
}

inline double exact_limit_oracle(EnergyModel const& model, std::span<int const> sizes,
                                 Quality const& q = {}, bool use_analytic = true)
{
    return exact_limit_oracle_detail(model, sizes, q, use_analytic).value;
}

}  // namespace thermolim
