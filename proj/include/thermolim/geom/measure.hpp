#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "../core/error.hpp"
#include "../core/parallel.hpp"
#include "../core/rng.hpp"
#include "domain.hpp"

namespace thermolim
{
//! Estimate of a measure or integral with its standard error.
struct MeasureEstimate
{
    double value{0};
    double std_error{0};
    std::size_t samples{0};
    std::uint64_t seed{0};
    bool exact{false};
};

//---------------------------------------------------------------------------//
//! Power-law regularity profile eta(t) = a t^b on [0, c).
struct EtaClass
{
    double a{1};
    double b{1};
    double c{1};

    //! Empty string when valid, else the first violated condition.
    std::string check() const
    {
        if (!(a > 0))
        {
            return "a>0 required";
        }
        if (!(b > 0 && b <= 1))
        {
            return "b∈(0,1] required";
        }
        if (!(c > 0))
        {
            return "c>0 required";
        }
        return {};
    }

    bool defined_at(double t) const { return t >= 0 && t < c; }

    double operator()(double t) const
    {
        expect(defined_at(t), "eta undefined");
        return a * std::pow(t, b);
    }
};

//---------------------------------------------------------------------------//
inline Vec3 uniform3(CounterRng& rng)
{
    double x = rng.uniform();
    double y = rng.uniform();
    double z = rng.uniform();
    return {x, y, z};
}

namespace detail
{
//! Hit-or-miss estimate of `count / n` scaled by `region_volume`.
inline MeasureEstimate
hit_or_miss(std::size_t hits, std::size_t n, double region_volume, std::uint64_t seed)
{
    MeasureEstimate r;
    r.samples = n;
    r.seed = seed;
    double p = static_cast<double>(hits) / static_cast<double>(n);
    r.value = region_volume * p;
    if (n > 1)
    {
        double sd = std::sqrt(p * (1 - p) * static_cast<double>(n)
                              / static_cast<double>(n - 1));
        r.std_error = region_volume * sd / std::sqrt(static_cast<double>(n));
    }
    return r;
}
}  // namespace detail

enum class VolumeMode
{
    automatic,  //!< exact short-circuit when the shape has a closed form
    monte_carlo,
};

/*!
 * Lebesgue measure of a domain.
 *
 * Hit-or-miss over the bounding box unless an exact value is available and
 * `mode` permits it.
 */
inline MeasureEstimate volume(Domain const& domain, std::size_t samples,
                              std::uint64_t seed,
                              VolumeMode mode = VolumeMode::automatic)
{
    expect(samples >= 1, "samples must be >= 1");
    Box box = domain.bbox();
    expect(!box.degenerate(), "empty bounding box");
    if (mode == VolumeMode::automatic)
    {
        if (auto v = domain.volume_hint())
        {
            return {*v, 0.0, 0, seed, true};
        }
    }
    std::size_t hits = sharded_count(samples, [&](std::size_t i) {
        CounterRng rng(seed, Stream::volume, i);
        return domain.contains(box.at(uniform3(rng)));
    });
    return detail::hit_or_miss(hits, samples, box.volume(), seed);
}

//! Exact volume when available, else a Monte Carlo value.
inline double volume_value(Domain const& domain, std::size_t samples,
                           std::uint64_t seed)
{
    if (domain.is_empty())
    {
        return 0.0;
    }
    return volume(domain, samples, seed).value;
}

//---------------------------------------------------------------------------//
//! Predicate "d(x, boundary) <= s".
using NearOracle = std::function<bool(Vec3 const&, double)>;

//! Near-boundary predicate built from an unsigned distance oracle.
inline NearOracle from_distance(std::function<double(Vec3 const&)> dist)
{
    return [dist = std::move(dist)](Vec3 const& x, double s) {
        return dist(x) <= s;
    };
}

/*!
 * Volume of { x : d(x, boundary) <= s } for an absolute radius s.
 *
 * Sampled over the bounding box inflated by s.
 */
inline MeasureEstimate sausage_volume_at_radius(Domain const& domain, double s,
                                                std::size_t samples,
                                                std::uint64_t seed,
                                                NearOracle const& near = {})
{
    expect(samples >= 1, "samples must be >= 1");
    expect(s >= 0 && std::isfinite(s), "sausage radius must be finite and >= 0");
    Box box = domain.bbox();
    expect(!box.degenerate(), "empty bounding box");
    expect(s <= box.diagonal(), "sausage radius exceeds domain extent");
    if (s == 0)
    {
        return {0.0, 0.0, samples, seed, true};
    }
    Box region = box.inflated(s);
    std::size_t hits = sharded_count(samples, [&](std::size_t i) {
        CounterRng rng(seed, Stream::sausage, i);
        Vec3 x = region.at(uniform3(rng));
        return near ? near(x, s) : domain.near_boundary(x, s);
    });
    return detail::hit_or_miss(hits, samples, region.volume(), seed);
}

//! Sausage volume at the scale-free parameter t, i.e. radius |domain|^{1/3} t.
inline MeasureEstimate sausage_volume(Domain const& domain, double t,
                                      std::size_t samples, std::uint64_t seed,
                                      NearOracle const& near = {})
{
    expect(t >= 0, "t must be >= 0");
    double v = volume(domain, samples, derive_seed(seed, Stream::volume)).value;
    return sausage_volume_at_radius(domain, std::cbrt(v) * t, samples, seed, near);
}

//---------------------------------------------------------------------------//
struct RegularityRow
{
    double t{0};
    double radius{0};
    MeasureEstimate sausage;
    double bound{0};
    //! (bound - value) / stderr; infinite when the estimate is exact.
    double margin_sigma{0};
    bool pass{true};
};

struct RegularityReport
{
    double volume{0};
    double multiplier{1};
    std::vector<RegularityRow> rows;
    bool pass{true};
    bool probabilistic{false};
};

/*!
 * One-sided check of |{d(x, boundary) <= |domain|^{1/3} t}| <= m |domain| eta(t)
 * at each t of the grid. A row fails when the estimate exceeds the bound by
 * more than three standard errors.
 */
inline RegularityReport
eta_regularity_audit(Domain const& domain, EtaClass const& eta,
                     std::span<double const> t_grid, std::size_t samples,
                     std::uint64_t seed, double multiplier = 1.0,
                     NearOracle const& near = {})
{
    auto bad = eta.check();
    expect(bad.empty(), bad);
    for (double t : t_grid)
    {
        expect(eta.defined_at(t), "eta undefined");
    }
    RegularityReport report;
    report.multiplier = multiplier;
    if (t_grid.empty())
    {
        return report;
    }
    auto vol = volume(domain, samples, derive_seed(seed, Stream::volume));
    report.volume = vol.value;
    report.probabilistic = !vol.exact;
    double scale = std::cbrt(vol.value);
    for (std::size_t k = 0; k < t_grid.size(); ++k)
    {
        RegularityRow row;
        row.t = t_grid[k];
        row.radius = scale * row.t;
        row.sausage = sausage_volume_at_radius(
            domain, row.radius, samples, derive_seed(seed, Stream::sausage, k), near);
        row.bound = multiplier * vol.value * eta(row.t);
        double excess = row.sausage.value - row.bound;
        double sigma = std::hypot(row.sausage.std_error, multiplier * vol.std_error * eta(row.t));
        if (sigma > 0)
        {
            row.margin_sigma = -excess / sigma;
            row.pass = excess <= 3 * sigma;
        }
        else
        {
            row.margin_sigma = excess <= 0 ? std::numeric_limits<double>::infinity()
                                           : -std::numeric_limits<double>::infinity();
            row.pass = excess <= 1e-12 * std::max(1.0, row.bound);
        }
        report.pass = report.pass && row.pass;
        report.rows.push_back(row);
    }
    return report;
}

//---------------------------------------------------------------------------//
//! Exact diameter when known, else the bounding-box diagonal (an upper bound).
inline double diameter(Domain const& domain)
{
    if (auto d = domain.diameter_hint())
    {
        return *d;
    }
    return domain.bbox().diagonal();
}

//---------------------------------------------------------------------------//
namespace detail
{
//! Additive recurrence generator for the R3 low-discrepancy sequence.
inline Vec3 r3_point(std::size_t k, Vec3 const& shift)
{
    constexpr double phi = 1.2207440846057594;  // real root of x^4 = x + 1
    constexpr double a1 = 1 / phi;
    constexpr double a2 = 1 / (phi * phi);
    constexpr double a3 = 1 / (phi * phi * phi);
    auto frac = [](double v) { return v - std::floor(v); };
    double kk = static_cast<double>(k);
    return {frac(shift.x + kk * a1), frac(shift.y + kk * a2), frac(shift.z + kk * a3)};
}
}  // namespace detail

/*!
 * Integral of f over the domain by randomized quasi-Monte Carlo.
 *
 * Independent random shifts of a Kronecker sequence give replicate
 * estimates; the standard error comes from their spread. Shapes with a
 * uniform interior map are integrated directly, others by hit-or-miss over
 * the bounding box.
 */
inline MeasureEstimate integrate(Domain const& domain,
                                 std::function<double(Vec3 const&)> const& f,
                                 std::size_t samples, std::uint64_t seed)
{
    expect(samples >= 2, "integration needs at least two samples");
    if (domain.is_empty())
    {
        return {0.0, 0.0, samples, seed, true};
    }
    std::size_t reps = std::min<std::size_t>(16, samples);
    std::size_t per = samples / reps;
    // Carrier: the domain itself, or the mappable side of an intersection.
    Domain carrier = domain;
    bool restrict = false;
    if (auto const* inter = domain.as<IntersectionShape>())
    {
        std::shared_ptr<Shape const> best;
        for (auto const& side : {inter->first(), inter->second()})
        {
            if (side->has_uniform_map() && side->exact_volume()
                && (!best || *side->exact_volume() < *best->exact_volume()))
            {
                best = side;
            }
        }
        if (best)
        {
            carrier = Domain(best);
            restrict = true;
        }
    }
    auto vhint = carrier.volume_hint();
    bool mapped = carrier.has_uniform_map() && vhint.has_value();
    Box box = domain.bbox();
    double weight = mapped ? *vhint : box.volume();

    auto values = map_shards<double>(reps, [&](std::size_t r) {
        CounterRng rng(seed, Stream::integrate, r);
        Vec3 shift = uniform3(rng);
        double acc = 0;
        for (std::size_t k = 0; k < per; ++k)
        {
            Vec3 u = detail::r3_point(k + 1, shift);
            if (mapped)
            {
                Vec3 x = carrier.map_uniform(u);
                if (!restrict || domain.contains(x))
                {
                    acc += f(x);
                }
            }
            else
            {
                Vec3 x = box.at(u);
                if (domain.contains(x))
                {
                    acc += f(x);
                }
            }
        }
        return weight * acc / static_cast<double>(per);
    });
    Moments m;
    for (double v : values)
    {
        m.add(v);
    }
    return {m.mean(), m.stderr_of_mean(), per * reps, seed, false};
}

}  // namespace thermolim
