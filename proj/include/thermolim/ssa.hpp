#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "core/error.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"
#include "models/audits.hpp"
#include "models/gaussian_free_energy.hpp"

namespace thermolim
{
//! Subset of the ground set {0, ..., n-1} as a bit mask.
using Mask = std::uint32_t;

inline constexpr std::size_t kMaxGround = 20;

inline int popcount(Mask m) { return std::popcount(m); }

//! Finite set function on subsets of a small ground set.
struct SetFunction
{
    std::string name;
    std::size_t ground{0};
    std::function<double(Mask)> value;

    double operator()(Mask m) const { return value(m); }
    Mask full() const { return ground >= 32 ? ~Mask{0} : (Mask{1} << ground) - 1; }
};

//! Ordered disjoint triple with the strong subadditivity sides.
struct SSAWitness
{
    Mask p1{0};
    Mask p2{0};
    Mask p3{0};
    //! s(P1 u P2 u P3) + s(P2)
    double lhs{0};
    //! s(P1 u P2) + s(P2 u P3)
    double rhs{0};
    double violation{-std::numeric_limits<double>::infinity()};

    auto key() const { return std::tuple{p1, p2, p3}; }
};

inline std::string mask_string(Mask m, std::size_t ground)
{
    std::ostringstream os;
    os << '{';
    bool first = true;
    for (std::size_t i = 0; i < ground; ++i)
    {
        if (m >> i & 1u)
        {
            os << (first ? "" : ",") << i;
            first = false;
        }
    }
    os << '}';
    return os.str();
}

inline SSAWitness ssa_witness(SetFunction const& fn, Mask p1, Mask p2, Mask p3)
{
    expect((p1 & p2) == 0 && (p2 & p3) == 0 && (p1 & p3) == 0, "triple must be disjoint");
    SSAWitness w{p1, p2, p3, 0, 0, 0};
    w.lhs = fn(p1 | p2 | p3) + fn(p2);
    w.rhs = fn(p1 | p2) + fn(p2 | p3);
    w.violation = w.lhs - w.rhs;
    return w;
}

namespace detail
{
//! Larger violation wins; ties go to the lexicographically smaller triple.
inline SSAWitness const& worse(SSAWitness const& a, SSAWitness const& b)
{
    if (a.violation != b.violation)
    {
        return a.violation > b.violation ? a : b;
    }
    return a.key() <= b.key() ? a : b;
}
}  // namespace detail

//---------------------------------------------------------------------------//
struct SSAReport
{
    AuditReport audit;
    SSAWitness worst;
    std::size_t trials{0};
    std::size_t violations{0};
    double tolerance{1e-9};
};

namespace detail
{
inline SSAReport finish_ssa(SetFunction const& fn, std::vector<std::pair<SSAWitness, std::size_t>> parts,
                            std::size_t trials, std::string const& label)
{
    SSAReport rep;
    rep.trials = trials;
    rep.audit = {"SSA", "finite tile sets", {}, true};
    for (auto const& [w, bad] : parts)
    {
        rep.worst = detail::worse(rep.worst, w);
        rep.violations += bad;
    }
    std::ostringstream os;
    os << label << " worst " << mask_string(rep.worst.p1, fn.ground) << ' '
       << mask_string(rep.worst.p2, fn.ground) << ' ' << mask_string(rep.worst.p3, fn.ground);
    rep.audit.add({os.str(), rep.worst.lhs, rep.worst.rhs, -rep.worst.violation, 0.0,
                   rep.worst.violation <= rep.tolerance});
    return rep;
}
}  // namespace detail

/*!
 * Random disjoint triples (P1, P2, P3) checked for
 * s(P1 u P2 u P3) + s(P2) <= s(P1 u P2) + s(P2 u P3).
 *
 * Block sizes are uniform in [1, max_block] for P1 and P3 and in
 * [0, max_block] for P2, so empty middles (plain subadditivity) occur.
 * With `empty_middle` every P2 is empty.
 */
inline SSAReport audit_ssa(SetFunction const& fn, std::size_t trials, std::size_t max_block,
                           std::uint64_t seed, bool empty_middle = false)
{
    expect(fn.ground >= 3, "ground set must have at least 3 elements");
    expect(fn.ground <= kMaxGround, "ground set too large");
    expect(max_block >= 1, "max_block must be >= 1");
    std::size_t shards = std::min<std::size_t>(kDefaultShards, std::max<std::size_t>(trials, 1));
    auto parts = map_shards<std::pair<SSAWitness, std::size_t>>(shards, [&](std::size_t k) {
        SSAWitness worst;
        std::size_t bad = 0;
        auto r = shard_range(trials, shards, k);
        for (std::size_t t = r.begin; t < r.end; ++t)
        {
            CounterRng rng(seed, Stream::ssa_trials, t);
            std::vector<std::size_t> order(fn.ground);
            for (std::size_t i = 0; i < order.size(); ++i)
            {
                order[i] = i;
            }
            for (std::size_t i = order.size() - 1; i > 0; --i)
            {
                std::swap(order[i], order[rng.below(i + 1)]);
            }
            std::size_t n = fn.ground;
            std::size_t cap = std::min(max_block, n - 2);
            std::size_t a = 1 + rng.below(cap);
            std::size_t c = 1 + rng.below(std::min(max_block, n - a - 1));
            std::size_t room = n - a - c;
            std::size_t b = empty_middle ? 0 : rng.below(std::min(max_block, room) + 1);
            Mask p1 = 0, p2 = 0, p3 = 0;
            std::size_t pos = 0;
            for (std::size_t i = 0; i < a; ++i)
            {
                p1 |= Mask{1} << order[pos++];
            }
            for (std::size_t i = 0; i < b; ++i)
            {
                p2 |= Mask{1} << order[pos++];
            }
            for (std::size_t i = 0; i < c; ++i)
            {
                p3 |= Mask{1} << order[pos++];
            }
            auto w = ssa_witness(fn, p1, p2, p3);
            bad += w.violation > 1e-9 ? 1 : 0;
            worst = detail::worse(worst, w);
        }
        return std::pair{worst, bad};
    });
    return detail::finish_ssa(fn, std::move(parts), trials, "random triples");
}

/*!
 * Every ordered triple of disjoint subsets with P1 and P3 nonempty
 * (4^n assignments of each element to P1, P2, P3 or none).
 */
inline SSAReport audit_ssa_exhaustive(SetFunction const& fn)
{
    expect(fn.ground >= 3, "ground set must have at least 3 elements");
    expect(fn.ground <= 10, "exhaustive check limited to 10 elements");
    std::size_t n = fn.ground;
    std::size_t total = std::size_t{1} << (2 * n);
    std::size_t shards = std::min<std::size_t>(kDefaultShards, total);
    auto parts = map_shards<std::pair<SSAWitness, std::size_t>>(shards, [&](std::size_t k) {
        SSAWitness worst;
        std::size_t bad = 0;
        auto r = shard_range(total, shards, k);
        for (std::size_t code = r.begin; code < r.end; ++code)
        {
            Mask p[4] = {0, 0, 0, 0};
            for (std::size_t i = 0; i < n; ++i)
            {
                p[(code >> (2 * i)) & 3u] |= Mask{1} << i;
            }
            if (p[1] == 0 || p[3] == 0)
            {
                continue;
            }
            auto w = ssa_witness(fn, p[1], p[2], p[3]);
            bad += w.violation > 1e-9 ? 1 : 0;
            worst = detail::worse(worst, w);
        }
        return std::pair{worst, bad};
    });
    std::size_t count = 0;
    for (std::size_t code = 0; code < total; ++code)
    {
        bool has1 = false, has3 = false;
        for (std::size_t i = 0; i < n; ++i)
        {
            auto v = (code >> (2 * i)) & 3u;
            has1 = has1 || v == 1;
            has3 = has3 || v == 3;
        }
        count += has1 && has3;
    }
    return detail::finish_ssa(fn, std::move(parts), count, "all triples");
}

//---------------------------------------------------------------------------//
/*!
 * Consequences of normalization plus strong subadditivity: s vanishes on
 * the empty set and singletons, decreases along nested pairs, and is never
 * positive.
 */
inline AuditReport derived_chain_audit(SetFunction const& fn, std::size_t trials,
                                       std::uint64_t seed)
{
    expect(fn.ground >= 1 && fn.ground <= kMaxGround, "ground set size out of range");
    constexpr double tol = 1e-9;
    AuditReport rep{"SSA chain", "finite tile sets", {}, true};
    double s0 = fn(0);
    rep.add({"empty set", s0, 0.0, -std::abs(s0), 0.0, s0 == 0.0});
    for (std::size_t i = 0; i < fn.ground; ++i)
    {
        double v = fn(Mask{1} << i);
        rep.add({"singleton " + std::to_string(i), v, 0.0, -std::abs(v), 0.0, v == 0.0});
    }
    Mask full = fn.full();
    double sf = fn(full);
    std::size_t shards = std::min<std::size_t>(kDefaultShards, std::max<std::size_t>(trials, 1));
    struct Worst
    {
        double mono{-std::numeric_limits<double>::infinity()};
        Mask mono_a{0}, mono_b{0};
        double pos{-std::numeric_limits<double>::infinity()};
        Mask pos_a{0};
        double full{-std::numeric_limits<double>::infinity()};
        Mask full_a{0};
    };
    auto parts = map_shards<Worst>(shards, [&](std::size_t k) {
        Worst w;
        auto r = shard_range(trials, shards, k);
        for (std::size_t t = r.begin; t < r.end; ++t)
        {
            CounterRng rng(seed, Stream::ssa_trials, t);
            Mask big = static_cast<Mask>(rng.next_u64()) & full;
            Mask small = big & static_cast<Mask>(rng.next_u64());
            double sb = fn(big);
            double ss = fn(small);
            if (sb - ss > w.mono)
            {
                w.mono = sb - ss;
                w.mono_a = small;
                w.mono_b = big;
            }
            if (sb > w.pos)
            {
                w.pos = sb;
                w.pos_a = big;
            }
            if (sf - sb > w.full)
            {
                w.full = sf - sb;
                w.full_a = big;
            }
        }
        return w;
    });
    Worst w;
    for (auto const& p : parts)
    {
        if (p.mono > w.mono)
        {
            w.mono = p.mono, w.mono_a = p.mono_a, w.mono_b = p.mono_b;
        }
        if (p.pos > w.pos)
        {
            w.pos = p.pos, w.pos_a = p.pos_a;
        }
        if (p.full > w.full)
        {
            w.full = p.full, w.full_a = p.full_a;
        }
    }
    if (trials > 0)
    {
        rep.add({"monotone " + mask_string(w.mono_a, fn.ground) + " in "
                     + mask_string(w.mono_b, fn.ground),
                 w.mono, 0.0, -w.mono, 0.0, w.mono <= tol});
        rep.add({"nonpositive " + mask_string(w.pos_a, fn.ground), w.pos, 0.0, -w.pos, 0.0,
                 w.pos <= tol});
        rep.add({"full set below " + mask_string(w.full_a, fn.ground), w.full, 0.0, -w.full,
                 0.0, w.full <= tol});
    }
    return rep;
}

//---------------------------------------------------------------------------//
struct LemmaTResult
{
    double lhs{0};
    double rhs{0};
    bool pass{true};
};

/*!
 * s(P) against (1 / #P) sum over ordered pairs mu != nu in P of s({mu, nu}).
 */
inline LemmaTResult lemmaT_check(SetFunction const& fn, Mask P)
{
    int n = popcount(P);
    expect(n >= 2, "lemmaT needs at least two elements");
    LemmaTResult r;
    r.lhs = fn(P);
    std::vector<double> terms;
    for (std::size_t i = 0; i < fn.ground; ++i)
    {
        for (std::size_t j = 0; j < fn.ground; ++j)
        {
            if (i != j && (P >> i & 1u) && (P >> j & 1u))
            {
                terms.push_back(fn((Mask{1} << i) | (Mask{1} << j)));
            }
        }
    }
    r.rhs = tree_reduce(std::move(terms), std::plus<>{}) / n;
    r.pass = r.lhs <= r.rhs + 1e-9;
    return r;
}

//! lemmaT_check on every subset with 2 <= #P <= max_size.
inline AuditReport lemmaT_exhaustive(SetFunction const& fn, int max_size)
{
    expect(fn.ground <= kMaxGround, "ground set too large");
    AuditReport rep{"lemmaT", "finite tile sets", {}, true};
    Mask full = fn.full();
    std::size_t checked = 0;
    std::size_t failed = 0;
    double worst = -std::numeric_limits<double>::infinity();
    Mask worst_p = 0;
    LemmaTResult worst_r;
    for (Mask p = 0; p <= full; ++p)
    {
        int c = popcount(p);
        if (c < 2 || c > max_size)
        {
            if (p == full)
            {
                break;
            }
            continue;
        }
        auto r = lemmaT_check(fn, p);
        ++checked;
        failed += r.pass ? 0 : 1;
        if (r.lhs - r.rhs > worst)
        {
            worst = r.lhs - r.rhs;
            worst_p = p;
            worst_r = r;
        }
        if (p == full)
        {
            break;
        }
    }
    std::ostringstream os;
    os << checked << " subsets, " << failed << " failed, worst " << mask_string(worst_p, fn.ground);
    rep.add({os.str(), worst_r.lhs, worst_r.rhs, worst_r.rhs - worst_r.lhs, 0.0, failed == 0});
    return rep;
}

//---------------------------------------------------------------------------//
// Fixtures
//---------------------------------------------------------------------------//

/*!
 * Gaussian block entropy defect s(P) = H(union of blocks) - sum of H(block).
 *
 * Each ground element is a block of `block_size` points scattered around a
 * random center; all 2^n values are tabulated up front.
 */
inline SetFunction gaussian_defect(std::size_t ground, std::uint64_t seed,
                                   std::size_t block_size = 3, double sigma = 0.5,
                                   double rho = 1e-6, double extent = 2.5)
{
    expect(ground >= 1 && ground <= 12, "gaussian defect ground size must be in [1, 12]");
    expect(block_size >= 1, "block size must be >= 1");
    std::vector<std::vector<Vec3>> blocks(ground);
    for (std::size_t b = 0; b < ground; ++b)
    {
        CounterRng rng(seed, Stream::test, b);
        Vec3 c{extent * rng.uniform(), extent * rng.uniform(), extent * rng.uniform()};
        for (std::size_t k = 0; k < block_size; ++k)
        {
            blocks[b].push_back(c + Vec3{rng.uniform(), rng.uniform(), rng.uniform()} * 0.8);
        }
    }
    std::vector<double> h(ground);
    for (std::size_t b = 0; b < ground; ++b)
    {
        h[b] = gaussian_entropy(blocks[b], sigma, rho);
    }
    std::size_t total = std::size_t{1} << ground;
    auto table = std::make_shared<std::vector<double>>(total, 0.0);
    auto values = map_shards<double>(total, [&](std::size_t m) {
        if (std::popcount(m) < 2)
        {
            return 0.0;
        }
        std::vector<Vec3> pts;
        std::vector<double> parts;
        for (std::size_t b = 0; b < ground; ++b)
        {
            if (m >> b & 1u)
            {
                pts.insert(pts.end(), blocks[b].begin(), blocks[b].end());
                parts.push_back(h[b]);
            }
        }
        return gaussian_entropy(pts, sigma, rho) - tree_reduce(std::move(parts), std::plus<>{});
    });
    *table = std::move(values);
    return {"gaussian", ground, [table](Mask m) { return (*table)[m]; }};
}

//! s(P) = |P|^2 for |P| >= 2; violates strong subadditivity.
inline SetFunction broken_square(std::size_t ground)
{
    return {"broken", ground, [](Mask m) {
                int c = popcount(m);
                return c >= 2 ? static_cast<double>(c * c) : 0.0;
            }};
}

/*!
 * s(P) = sum over ordered pairs mu != nu in P of w(mu, nu), with symmetric
 * random weights w in [-1, 0].
 */
inline SetFunction pairwise_additive(std::size_t ground, std::uint64_t seed)
{
    auto w = std::make_shared<std::vector<double>>(ground * ground, 0.0);
    for (std::size_t i = 0; i < ground; ++i)
    {
        for (std::size_t j = i + 1; j < ground; ++j)
        {
            CounterRng rng(seed, Stream::test, i * ground + j);
            double v = -rng.uniform();
            (*w)[i * ground + j] = v;
            (*w)[j * ground + i] = v;
        }
    }
    return {"pairwise", ground, [w, ground](Mask m) {
                double acc = 0;
                for (std::size_t i = 0; i < ground; ++i)
                {
                    for (std::size_t j = 0; j < ground; ++j)
                    {
                        if (i != j && (m >> i & 1u) && (m >> j & 1u))
                        {
                            acc += (*w)[i * ground + j];
                        }
                    }
                }
                return acc;
            }};
}

inline std::vector<std::string> const& set_function_names()
{
    static std::vector<std::string> const names{"gaussian", "broken", "pairwise"};
    return names;
}

inline SetFunction make_set_function(std::string const& name, std::size_t ground,
                                     std::uint64_t seed)
{
    if (name == "gaussian")
    {
        return gaussian_defect(ground, seed);
    }
    if (name == "broken")
    {
        return broken_square(ground);
    }
    if (name == "pairwise")
    {
        return pairwise_additive(ground, seed);
    }
    throw Error("unknown set function '" + name + "'");
}

}  // namespace thermolim
