#pragma once

#include <string>
#include <vector>

#include "broken_fixture.hpp"
#include "gaussian_free_energy.hpp"
#include "lattice_pair.hpp"
#include "local_functional.hpp"

namespace thermolim
{
inline std::vector<std::string> const& model_names()
{
    static std::vector<std::string> const names{
        "local-sin", "local-const", "volume", "lattice", "gaussian", "broken-fixture"};
    return names;
}

/*!
 * Model by name with optional parameter overrides.
 *
 * Unknown names and unknown parameter keys raise errors.
 */
inline ModelPtr make_model(std::string const& name, ParamMap const& params = {})
{
    auto get = [&](char const* key, double fallback) {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    };
    auto allow = [&](std::vector<std::string> const& keys) {
        for (auto const& [k, v] : params)
        {
            expect(std::find(keys.begin(), keys.end(), k) != keys.end(),
                   "unknown parameter '" + k + "' for model " + name);
        }
    };
    if (name == "local-sin")
    {
        allow({});
        return LocalFunctionalModel::sin2();
    }
    if (name == "local-const")
    {
        allow({"c"});
        return LocalFunctionalModel::constant(get("c", 1.0));
    }
    if (name == "volume")
    {
        allow({});
        return LocalFunctionalModel::volume();
    }
    if (name == "lattice")
    {
        allow({"self_energy", "z", "m", "r_cut", "kappa"});
        LatticePairParams p;
        p.self_energy = get("self_energy", p.self_energy);
        p.z = get("z", p.z);
        p.m = get("m", p.m);
        p.r_cut = get("r_cut", p.r_cut);
        p.kappa = get("kappa", p.kappa);
        return LatticePairModel::make(p);
    }
    if (name == "gaussian")
    {
        allow({"e0", "T", "sigma", "rho"});
        GaussianParams p;
        p.e0 = get("e0", p.e0);
        p.temperature = get("T", p.temperature);
        p.sigma = get("sigma", p.sigma);
        p.rho = get("rho", p.rho);
        return GaussianFreeEnergyModel::make(p);
    }
    if (name == "broken-fixture")
    {
        allow({});
        return BrokenFixtureModel::make();
    }
    throw Error("unknown model '" + name + "'");
}

}  // namespace thermolim
