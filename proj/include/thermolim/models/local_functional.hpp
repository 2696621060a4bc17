#pragma once

#include <cmath>
#include <string>

#include "energy_model.hpp"

namespace thermolim
{
//! Bounded Z^3-periodic density of a local functional.
enum class LocalDensity
{
    sin2,      //!< sin^2(2 pi x_1)
    constant,  //!< c everywhere
};

/*!
 * Local functional E(domain) = integral of a periodic density.
 *
 * Boxes integrate in closed form; constant densities on shapes with an exact
 * volume are exact. Everything else uses randomized quasi-Monte Carlo.
 */
class LocalFunctionalModel final : public EnergyModel
{
  public:
    explicit LocalFunctionalModel(LocalDensity density, double c = 1.0)
        : density_(density), c_(c)
    {
        expect(std::isfinite(c), "density constant must be finite");
    }

    static ModelPtr sin2()
    {
        return std::make_shared<LocalFunctionalModel>(LocalDensity::sin2);
    }
    static ModelPtr constant(double c)
    {
        return std::make_shared<LocalFunctionalModel>(LocalDensity::constant, c);
    }
    static ModelPtr volume() { return constant(1.0); }

    std::string name() const override
    {
        return density_ == LocalDensity::sin2 ? "local-sin" : "local-const";
    }
    ParamMap params() const override
    {
        if (density_ == LocalDensity::sin2)
        {
            return {};
        }
        return {{"c", c_}};
    }
    double kappa() const override
    {
        double sup = density_ == LocalDensity::sin2 ? 1.0 : std::abs(c_);
        return std::max(sup, 1e-12);
    }
    std::optional<double> exact_limit() const override
    {
        return density_ == LocalDensity::sin2 ? 0.5 : c_;
    }

    LocalDensity density() const { return density_; }

    double chi(Vec3 const& x) const
    {
        if (density_ == LocalDensity::constant)
        {
            return c_;
        }
        double s = std::sin(2 * M_PI * x.x);
        return s * s;
    }

    //! Closed-form integral over an axis-aligned box.
    double box_integral(Box const& b) const
    {
        Vec3 e = b.extent();
        if (density_ == LocalDensity::constant)
        {
            return c_ * e.x * e.y * e.z;
        }
        double along = e.x / 2
                       - (std::sin(4 * M_PI * b.hi.x) - std::sin(4 * M_PI * b.lo.x))
                             / (8 * M_PI);
        return along * e.y * e.z;
    }

  protected:
    EnergyEstimate evaluate(Domain const& domain, Quality const& q) const override
    {
        if (auto const* bs = domain.as<BoxShape>())
        {
            return {box_integral(bs->box()), 0.0, true};
        }
        if (density_ == LocalDensity::constant)
        {
            if (auto v = domain.volume_hint())
            {
                return {c_ * *v, 0.0, true};
            }
        }
        auto est = integrate(
            domain, [this](Vec3 const& x) { return chi(x); },
            std::max<std::size_t>(q.samples, 2), q.seed);
        return {est.value, est.std_error, false};
    }

  private:
    LocalDensity density_;
    double c_;
};

}  // namespace thermolim
