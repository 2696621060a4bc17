#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "energy_model.hpp"

namespace thermolim
{
struct LatticePairParams
{
    double self_energy{-1.0};
    //! Yukawa strength z and screening m: v(r) = z^2 exp(-m r) / r.
    double z{0.3};
    double m{1.0};
    double r_cut{1.0};
    Vec3 offset{};
    double kappa{2.0};
};

/*!
 * Sites of Z^3 + offset with a per-site energy and a truncated Yukawa pair
 * potential.
 *
 * E(domain) = self * #sites + sum over unordered site pairs within r_cut of
 * v(r). Energies are integer tallies per distance shell; tile decompositions
 * regroup those tallies exactly.
 */
class LatticePairModel final : public EnergyModel, public A6Decomposer
{
  public:
    explicit LatticePairModel(LatticePairParams p = {}) : p_(p)
    {
        expect(std::isfinite(p.self_energy), "self_energy must be finite");
        expect(p.m >= 0, "screening must be >= 0");
        expect(p.r_cut >= 0, "r_cut must be >= 0");
        expect(p.kappa > 0, "kappa must be > 0");
        int rmax = static_cast<int>(std::floor(p.r_cut));
        std::map<std::int64_t, std::size_t> shell_of;
        for (int a = -rmax; a <= rmax; ++a)
        {
            for (int b = -rmax; b <= rmax; ++b)
            {
                for (int c = -rmax; c <= rmax; ++c)
                {
                    std::int64_t d2 = a * a + b * b + c * c;
                    bool positive = a > 0 || (a == 0 && (b > 0 || (b == 0 && c > 0)));
                    if (!positive || static_cast<double>(d2) > p.r_cut * p.r_cut)
                    {
                        continue;
                    }
                    shell_of.emplace(d2, 0);
                    half_offsets_.push_back({a, b, c});
                }
            }
        }
        basis_.push_back(p.self_energy);
        for (auto& [d2, idx] : shell_of)
        {
            idx = basis_.size();
            basis_.push_back(potential(std::sqrt(static_cast<double>(d2))));
        }
        for (auto const& o : half_offsets_)
        {
            offset_shell_.push_back(shell_of.at(o[0] * o[0] + o[1] * o[1] + o[2] * o[2]));
        }
    }

    static ModelPtr make(LatticePairParams p = {})
    {
        return std::make_shared<LatticePairModel>(p);
    }

    std::string name() const override { return "lattice"; }
    ParamMap params() const override
    {
        return {{"self_energy", p_.self_energy}, {"z", p_.z}, {"m", p_.m},
                {"r_cut", p_.r_cut}, {"kappa", p_.kappa}};
    }
    double kappa() const override { return p_.kappa; }
    A6Decomposer const* decomposer() const override { return this; }
    LatticePairParams const& lattice_params() const { return p_; }

    double potential(double r) const
    {
        if (r <= 0 || r > p_.r_cut)
        {
            return 0.0;
        }
        return p_.z * p_.z * std::exp(-p_.m * r) / r;
    }

    //! Infinite-volume energy per site: self + half the sum of v over Z^3 \ 0.
    double bulk_energy_per_site() const
    {
        double acc = p_.self_energy;
        for (std::size_t k = 0; k < half_offsets_.size(); ++k)
        {
            acc += basis_[offset_shell_[k]];
        }
        return acc;
    }

    //! Cutoff no larger than the inradius of the tiles at scale ell.
    bool cutoff_within_inradius(double ell) const
    {
        return p_.r_cut <= reference_inradius() * ell;
    }

    std::optional<IntegerForm> integer_form(Domain const& domain) const override
    {
        return tally(lattice_sites(domain, p_.offset));
    }

    IntegerForm tally(SiteSet const& s) const
    {
        IntegerForm f{basis_, std::vector<std::int64_t>(basis_.size(), 0)};
        f.coeffs[0] = static_cast<std::int64_t>(s.size());
        for (auto const& k : s.sites)
        {
            for (std::size_t o = 0; o < half_offsets_.size(); ++o)
            {
                auto const& d = half_offsets_[o];
                if (s.has({k[0] + d[0], k[1] + d[1], k[2] + d[2]}))
                {
                    ++f.coeffs[offset_shell_[o]];
                }
            }
        }
        return f;
    }

    Decomposition decompose(Domain const& omega, TilingFrame const& frame,
                            std::span<TileIndex const> P,
                            Quality const& /*q*/) const override
    {
        Decomposition d;
        d.tiles = normalized_tiles(P);
        std::size_t n = d.tiles.size();
        IntegerForm zero{basis_, std::vector<std::int64_t>(basis_.size(), 0)};
        std::vector<IntegerForm> tile_forms(n, zero);
        std::map<std::pair<std::size_t, std::size_t>, IntegerForm> pair_forms;

        SiteSet s = lattice_sites(clip_to_tiles(omega, frame, d.tiles), p_.offset);
        auto owner_of_site = assign_sites(s, frame, d.tiles);
        std::vector<std::ptrdiff_t> owner(s.mask.size(), -1);
        for (std::size_t k = 0; k < s.size(); ++k)
        {
            owner[static_cast<std::size_t>(s.flat(s.sites[k]))] = owner_of_site[k];
        }
        for (std::size_t k = 0; k < s.size(); ++k)
        {
            auto a = owner_of_site[k];
            if (a < 0)
            {
                continue;
            }
            auto const& site = s.sites[k];
            ++tile_forms[static_cast<std::size_t>(a)].coeffs[0];
            for (std::size_t o = 0; o < half_offsets_.size(); ++o)
            {
                auto const& dv = half_offsets_[o];
                auto idx = s.flat({site[0] + dv[0], site[1] + dv[1], site[2] + dv[2]});
                if (idx < 0 || !s.mask[static_cast<std::size_t>(idx)])
                {
                    continue;
                }
                auto b = owner[static_cast<std::size_t>(idx)];
                if (b < 0)
                {
                    continue;
                }
                if (a == b)
                {
                    ++tile_forms[static_cast<std::size_t>(a)].coeffs[offset_shell_[o]];
                }
                else
                {
                    auto ua = static_cast<std::size_t>(a);
                    auto ub = static_cast<std::size_t>(b);
                    std::pair key{std::min(ua, ub), std::max(ua, ub)};
                    auto it = pair_forms.try_emplace(key, zero).first;
                    ++it->second.coeffs[offset_shell_[o]];
                }
            }
        }

        IntegerForm total = zero;
        for (auto const& f : tile_forms)
        {
            d.tile_energy.push_back(f.evaluate());
            total += f;
        }
        for (auto const& [key, f] : pair_forms)
        {
            d.pairs.push_back({key.first, key.second, f.evaluate()});
            total += f;
        }
        d.regrouped = total;
        return d;
    }

  protected:
    EnergyEstimate evaluate(Domain const& domain, Quality const&) const override
    {
        return {integer_form(domain)->evaluate(), 0.0, true};
    }

  private:
    LatticePairParams p_;
    std::vector<std::array<int, 3>> half_offsets_;
    std::vector<std::size_t> offset_shell_;
    std::vector<double> basis_;
};

}  // namespace thermolim
