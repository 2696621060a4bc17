#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "../core/error.hpp"
#include "../core/parallel.hpp"
#include "../geom/domain.hpp"
#include "../geom/measure.hpp"
#include "../tiling.hpp"

namespace thermolim
{
//! Sampling budget for one energy evaluation.
struct Quality
{
    std::size_t samples{100000};
    std::uint64_t seed{0};
};

struct EnergyEstimate
{
    double value{0};
    double std_error{0};
    bool deterministic{true};
};

using ParamMap = std::map<std::string, double>;

//---------------------------------------------------------------------------//
/*!
 * Integer combination of fixed real constants.
 *
 * Lattice energies are integer tallies against a small set of constants;
 * evaluating the tallies in a fixed order makes regrouped sums bit-exact.
 */
struct IntegerForm
{
    std::vector<double> basis;
    std::vector<std::int64_t> coeffs;

    double evaluate() const
    {
        double acc = 0;
        for (std::size_t k = 0; k < basis.size(); ++k)
        {
            acc += static_cast<double>(coeffs[k]) * basis[k];
        }
        return acc;
    }

    IntegerForm& operator+=(IntegerForm const& o)
    {
        if (coeffs.empty())
        {
            basis = o.basis;
            coeffs.assign(o.coeffs.size(), 0);
        }
        expect(o.coeffs.size() == coeffs.size(), "integer form size mismatch");
        for (std::size_t k = 0; k < coeffs.size(); ++k)
        {
            coeffs[k] += o.coeffs[k];
        }
        return *this;
    }
};

//---------------------------------------------------------------------------//
//! Interaction between members i < j of a decomposition.
struct PairTerm
{
    std::size_t i{0};
    std::size_t j{0};
    double value{0};
};

/*!
 * Local energy decomposition of a domain over a finite set of tiles.
 *
 * Pairs are stored once per unordered pair; absent pairs interact with
 * value zero. Sums over "mu != nu" count ordered pairs.
 */
struct Decomposition
{
    std::vector<TileIndex> tiles;
    std::vector<double> tile_energy;
    std::vector<PairTerm> pairs;
    double s_value{0};
    //! Regrouped tallies: tile terms plus half the ordered pair terms.
    std::optional<IntegerForm> regrouped;

    std::optional<std::size_t> index_of(TileIndex const& t) const
    {
        auto it = std::lower_bound(tiles.begin(), tiles.end(), t);
        if (it == tiles.end() || !(*it == t))
        {
            return std::nullopt;
        }
        return static_cast<std::size_t>(it - tiles.begin());
    }

    double pair_value(std::size_t a, std::size_t b) const
    {
        if (a == b)
        {
            return 0.0;
        }
        auto lo = std::min(a, b);
        auto hi = std::max(a, b);
        auto it = std::lower_bound(pairs.begin(), pairs.end(), std::pair{lo, hi},
                                   [](PairTerm const& p, std::pair<std::size_t, std::size_t> const& k) {
                                       return std::pair{p.i, p.j} < k;
                                   });
        if (it == pairs.end() || it->i != lo || it->j != hi)
        {
            return 0.0;
        }
        return it->value;
    }

    double tile_sum() const { return tree_reduce(tile_energy, std::plus<>{}); }

    //! Sum over ordered pairs mu != nu.
    double ordered_pair_sum() const
    {
        std::vector<double> v;
        v.reserve(pairs.size());
        for (auto const& p : pairs)
        {
            v.push_back(p.value);
        }
        return 2 * tree_reduce(std::move(v), std::plus<>{});
    }

    //! Sum of tile energies + half the ordered pair sum - s.
    double assembled() const { return tile_sum() + 0.5 * ordered_pair_sum() - s_value; }
};

class EnergyModel;

//! Source of the tile energies, pair interactions and entropy defect.
class A6Decomposer
{
  public:
    virtual ~A6Decomposer() = default;

    //! Decomposition over the set P (sorted and deduplicated on return).
    virtual Decomposition decompose(Domain const& omega, TilingFrame const& frame,
                                    std::span<TileIndex const> P,
                                    Quality const& q) const = 0;

    virtual double tau(double /*ell*/) const { return 0.0; }

    double tile_energy(Domain const& omega, TilingFrame const& frame,
                       TileIndex const& mu, Quality const& q = {}) const
    {
        std::array<TileIndex, 1> p{mu};
        return decompose(omega, frame, p, q).tile_energy.at(0);
    }

    double pair_interaction(Domain const& omega, TilingFrame const& frame,
                            TileIndex const& mu, TileIndex const& nu,
                            Quality const& q = {}) const
    {
        if (mu == nu)
        {
            return 0.0;
        }
        std::array<TileIndex, 2> p{mu, nu};
        auto d = decompose(omega, frame, p, q);
        return d.pair_value(*d.index_of(mu), *d.index_of(nu));
    }

    double entropy_defect(Domain const& omega, TilingFrame const& frame,
                          std::span<TileIndex const> P, Quality const& q = {}) const
    {
        return decompose(omega, frame, P, q).s_value;
    }
};

//---------------------------------------------------------------------------//
/*!
 * Energy functional on bounded domains.
 *
 * The empty domain always has energy exactly zero; other domains are
 * dispatched to `evaluate`.
 */
class EnergyModel
{
  public:
    virtual ~EnergyModel() = default;

    virtual std::string name() const = 0;
    virtual ParamMap params() const = 0;
    //! Stability constant: energy >= -kappa |domain| on audited domains.
    virtual double kappa() const = 0;
    virtual std::optional<double> exact_limit() const { return std::nullopt; }
    virtual A6Decomposer const* decomposer() const { return nullptr; }
    //! Exact integer tally form of the energy, when the model has one.
    virtual std::optional<IntegerForm> integer_form(Domain const&) const
    {
        return std::nullopt;
    }

    EnergyEstimate energy(Domain const& domain, Quality const& q = {}) const
    {
        if (domain.is_empty())
        {
            return {0.0, 0.0, true};
        }
        return evaluate(domain, q);
    }

  protected:
    virtual EnergyEstimate evaluate(Domain const& domain, Quality const& q) const = 0;
};

using ModelPtr = std::shared_ptr<EnergyModel const>;

//! Decomposition through the model's decomposer.
inline Decomposition decompose(EnergyModel const& model, Domain const& omega,
                               TilingFrame const& frame,
                               std::span<TileIndex const> P, Quality const& q = {})
{
    auto const* dec = model.decomposer();
    expect(dec != nullptr, "model not decomposable");
    frame.validate();
    return dec->decompose(omega, frame, P, q);
}

//---------------------------------------------------------------------------//
//! Lattice sites k + offset (k integer) inside a domain.
struct SiteSet
{
    Vec3 offset;
    std::array<std::int64_t, 3> lo{0, 0, 0};
    std::array<std::int64_t, 3> dims{0, 0, 0};
    //! Occupancy over the integer box [lo, lo + dims).
    std::vector<std::uint8_t> mask;
    //! Integer coordinates of the sites in lexicographic order.
    std::vector<std::array<std::int64_t, 3>> sites;

    std::size_t size() const { return sites.size(); }

    //! Flat index into the integer box, or -1 outside it.
    std::ptrdiff_t flat(std::array<std::int64_t, 3> const& k) const
    {
        std::ptrdiff_t idx = 0;
        for (int i = 0; i < 3; ++i)
        {
            std::int64_t r = k[i] - lo[i];
            if (r < 0 || r >= dims[i])
            {
                return -1;
            }
            idx = idx * static_cast<std::ptrdiff_t>(dims[i]) + static_cast<std::ptrdiff_t>(r);
        }
        return idx;
    }

    bool has(std::array<std::int64_t, 3> const& k) const
    {
        auto idx = flat(k);
        return idx >= 0 && mask[static_cast<std::size_t>(idx)] != 0;
    }

    Vec3 position(std::array<std::int64_t, 3> const& k) const
    {
        return Vec3{static_cast<double>(k[0]), static_cast<double>(k[1]),
                    static_cast<double>(k[2])}
               + offset;
    }
};

inline SiteSet lattice_sites(Domain const& domain, Vec3 const& offset)
{
    SiteSet s;
    s.offset = offset;
    if (domain.is_empty())
    {
        return s;
    }
    Box b = domain.bbox();
    std::array<std::int64_t, 3> hi{};
    for (int i = 0; i < 3; ++i)
    {
        s.lo[i] = static_cast<std::int64_t>(std::ceil(b.lo[i] - offset[i]));
        hi[i] = static_cast<std::int64_t>(std::floor(b.hi[i] - offset[i]));
        s.dims[i] = std::max<std::int64_t>(0, hi[i] - s.lo[i] + 1);
    }
    std::size_t total = static_cast<std::size_t>(s.dims[0] * s.dims[1] * s.dims[2]);
    s.mask.assign(total, 0);
    std::size_t idx = 0;
    for (std::int64_t a = 0; a < s.dims[0]; ++a)
    {
        for (std::int64_t b2 = 0; b2 < s.dims[1]; ++b2)
        {
            for (std::int64_t c = 0; c < s.dims[2]; ++c, ++idx)
            {
                std::array<std::int64_t, 3> k{s.lo[0] + a, s.lo[1] + b2, s.lo[2] + c};
                if (domain.contains(s.position(k)))
                {
                    s.mask[idx] = 1;
                    s.sites.push_back(k);
                }
            }
        }
    }
    return s;
}

//---------------------------------------------------------------------------//
//! Sorted, deduplicated copy of a tile set.
inline std::vector<TileIndex> normalized_tiles(std::span<TileIndex const> P)
{
    std::vector<TileIndex> t(P.begin(), P.end());
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

//! The domain clipped to the bounding box of the given (untau'd) tiles.
inline Domain clip_to_tiles(Domain const& omega, TilingFrame const& frame,
                            std::span<TileIndex const> tiles)
{
    if (tiles.empty() || omega.is_empty())
    {
        return Domain::empty();
    }
    TilingFrame base{frame.g, frame.ell, 0.0};
    Box b = Box::empty_box();
    for (auto const& t : tiles)
    {
        for (auto const& v : tile_vertices(base, t))
        {
            b.expand(v);
        }
    }
    return Domain::intersection(omega, Domain::box(b.inflated(1e-9 * frame.ell)));
}

/*!
 * Member index (into sorted `tiles`) of the tau = 0 tile owning each site, or
 * -1 when the owner is not a member. Ownership is the lexicographically
 * smallest tile whose closure contains the site.
 */
inline std::vector<std::ptrdiff_t>
assign_sites(SiteSet const& sites, TilingFrame const& frame,
             std::vector<TileIndex> const& tiles)
{
    std::vector<std::ptrdiff_t> owner(sites.size(), -1);
    for (std::size_t k = 0; k < sites.size(); ++k)
    {
        Vec3 y = frame.g.pullback(sites.position(sites.sites[k]), frame.ell);
        TileIndex t = locate_lexicographic(y);
        auto it = std::lower_bound(tiles.begin(), tiles.end(), t);
        if (it != tiles.end() && *it == t)
        {
            owner[k] = it - tiles.begin();
        }
    }
    return owner;
}

//---------------------------------------------------------------------------//
//! Volume of a member of the regular class containing the domain.
inline double regularized_volume(Domain const& domain, double volume)
{
    if (domain.is_empty())
    {
        return 0.0;
    }
    if (domain.convex())
    {
        return volume;
    }
    Box b = domain.bbox();
    double r = b.diagonal() / 2;
    double ball = 4.0 / 3.0 * M_PI * r * r * r;
    return std::min(b.volume(), ball);
}

}  // namespace thermolim
