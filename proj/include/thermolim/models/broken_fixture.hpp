#pragma once

#include <string>

#include "energy_model.hpp"

namespace thermolim
{
//! Deliberately unstable functional E = -|domain|^2, for checker sensitivity.
class BrokenFixtureModel final : public EnergyModel
{
  public:
    static ModelPtr make() { return std::make_shared<BrokenFixtureModel>(); }

    std::string name() const override { return "broken-fixture"; }
    ParamMap params() const override { return {}; }
    double kappa() const override { return 1.0; }

  protected:
    EnergyEstimate evaluate(Domain const& domain, Quality const& q) const override
    {
        auto v = volume(domain, std::max<std::size_t>(q.samples, 1), q.seed);
        return {-v.value * v.value, 2 * v.value * v.std_error, v.exact};
    }
};

}  // namespace thermolim
