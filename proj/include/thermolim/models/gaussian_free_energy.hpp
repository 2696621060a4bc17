#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "energy_model.hpp"

namespace thermolim
{
/*!
 * Differential entropy of the Gaussian vector with covariance
 * k(x, y) = exp(-|x - y|^2 / (2 sigma^2)) + rho [x == y] over the points:
 * H = (n log(2 pi e) + log det K) / 2.
 */
inline double gaussian_entropy(std::span<Vec3 const> pts, double sigma, double rho)
{
    std::size_t n = pts.size();
    if (n == 0)
    {
        return 0.0;
    }
    Eigen::MatrixXd k(n, n);
    double inv = 1.0 / (2 * sigma * sigma);
    for (std::size_t i = 0; i < n; ++i)
    {
        for (std::size_t j = 0; j <= i; ++j)
        {
            double v = std::exp(-dot(pts[i] - pts[j], pts[i] - pts[j]) * inv) + (i == j ? rho : 0.0);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    expect(llt.info() == Eigen::Success, "kernel degenerate");
    double logdet = 0;
    auto const& l = llt.matrixLLT();
    for (std::size_t i = 0; i < n; ++i)
    {
        double d = l(i, i);
        expect(d > 0 && std::isfinite(d), "kernel degenerate");
        logdet += 2 * std::log(d);
    }
    return 0.5 * (static_cast<double>(n) * std::log(2 * M_PI * M_E) + logdet);
}

struct GaussianParams
{
    double e0{-1.0};
    double temperature{1.0};
    double sigma{0.5};
    double rho{1e-6};
    Vec3 offset{};
};

/*!
 * Free energy F = e0 #sites - T H(sites) of a Gaussian field on lattice
 * sites.
 *
 * Tile decompositions use the per-tile free energies with no pair
 * interaction; the entropy defect T (H(union) - sum of block entropies)
 * carries the correlation between tiles.
 */
class GaussianFreeEnergyModel final : public EnergyModel, public A6Decomposer
{
  public:
    explicit GaussianFreeEnergyModel(GaussianParams p = {}) : p_(p)
    {
        expect(p.temperature > 0, "temperature must be > 0");
        expect(p.sigma > 0, "sigma must be > 0");
        expect(p.rho > 0, "rho must be > 0");
    }

    static ModelPtr make(GaussianParams p = {})
    {
        return std::make_shared<GaussianFreeEnergyModel>(p);
    }

    std::string name() const override { return "gaussian"; }
    ParamMap params() const override
    {
        return {{"e0", p_.e0}, {"T", p_.temperature}, {"sigma", p_.sigma}, {"rho", p_.rho}};
    }
    //! Hadamard bound H <= n log(2 pi e (1 + rho)) / 2, with at most two sites
    //! per unit volume on audited domains.
    double kappa() const override
    {
        double h1 = 0.5 * std::log(2 * M_PI * M_E * (1 + p_.rho));
        return 2 * std::max(p_.temperature * h1 - p_.e0, 1e-12);
    }
    A6Decomposer const* decomposer() const override { return this; }
    GaussianParams const& gaussian_params() const { return p_; }

    double entropy(std::span<Vec3 const> pts) const
    {
        return gaussian_entropy(pts, p_.sigma, p_.rho);
    }

    Decomposition decompose(Domain const& omega, TilingFrame const& frame,
                            std::span<TileIndex const> P,
                            Quality const& /*q*/) const override
    {
        Decomposition d;
        d.tiles = normalized_tiles(P);
        SiteSet s = lattice_sites(clip_to_tiles(omega, frame, d.tiles), p_.offset);
        auto owner = assign_sites(s, frame, d.tiles);
        std::vector<std::vector<Vec3>> blocks(d.tiles.size());
        std::vector<Vec3> all;
        for (std::size_t k = 0; k < s.size(); ++k)
        {
            if (owner[k] >= 0)
            {
                Vec3 x = s.position(s.sites[k]);
                blocks[static_cast<std::size_t>(owner[k])].push_back(x);
                all.push_back(x);
            }
        }
        std::vector<double> block_h;
        for (auto const& b : blocks)
        {
            double h = entropy(b);
            block_h.push_back(h);
            d.tile_energy.push_back(p_.e0 * static_cast<double>(b.size())
                                    - p_.temperature * h);
        }
        if (d.tiles.size() >= 2)
        {
            double sum = tree_reduce(block_h, std::plus<>{});
            d.s_value = p_.temperature * (entropy(all) - sum);
        }
        return d;
    }

  protected:
    EnergyEstimate evaluate(Domain const& domain, Quality const&) const override
    {
        SiteSet s = lattice_sites(domain, p_.offset);
        std::vector<Vec3> pts;
        pts.reserve(s.size());
        for (auto const& k : s.sites)
        {
            pts.push_back(s.position(k));
        }
        double h = entropy(pts);
        return {p_.e0 * static_cast<double>(pts.size()) - p_.temperature * h, 0.0, true};
    }

  private:
    GaussianParams p_;
};

}  // namespace thermolim
