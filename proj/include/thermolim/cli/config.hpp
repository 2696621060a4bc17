#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "../geom/measure.hpp"
#include "../harness/experiments.hpp"
#include "../models/registry.hpp"
#include "../ssa.hpp"

namespace thermolim::cli
{
inline std::vector<std::string> const& command_names()
{
    static std::vector<std::string> const names{
        "audit", "limit-ref", "limit-general", "ssa", "tiling-check", "lower-bound", "report"};
    return names;
}

//! Parameters of one CLI invocation.
struct Config
{
    std::string command;
    std::string model{"local-sin"};
    ParamMap model_params;
    std::vector<std::string> domains;
    std::vector<double> ell{2, 4, 8, 16};
    std::vector<double> L{2, 4, 8, 16};
    double tau{0};
    double delta{1};
    std::size_t samples{200000};
    std::uint64_t seed{1};
    std::size_t g_samples{32};
    //! Sampled motions for translation and sliding averages.
    std::size_t motions{20000};
    std::string reference{"simplex"};
    std::vector<int> box_sizes{8, 16, 32};
    EtaClass eta{24, 1, 0.2};
    std::string check{"A2"};
    std::string fn{"gaussian"};
    std::size_t ground{8};
    std::size_t trials{10000};
    std::size_t max_block{3};
    bool exhaustive{false};
    std::string out;
    std::string csv;
    std::string input;
    unsigned threads{0};
};

//! Problem with one configuration field.
struct Diagnostic
{
    std::string field;
    std::string reason;

    friend bool operator==(Diagnostic const&, Diagnostic const&) = default;
};

inline std::ostream& operator<<(std::ostream& os, Diagnostic const& d)
{
    return os << d.field << ": " << d.reason;
}

//---------------------------------------------------------------------------//
/*!
 * Domain from a spec string: "ball:R" (origin-centered), "cube:L"
 * (origin-centered side L), "simplex:L" (L times the reference simplex) or
 * "lshape:S" (the L-shape of size S shifted by -1/2 per axis).
 */
inline Domain parse_domain(std::string const& spec)
{
    auto colon = spec.find(':');
    expect(colon != std::string::npos, "domain spec must be kind:size");
    std::string kind = spec.substr(0, colon);
    double v = 0;
    try
    {
        std::size_t used = 0;
        v = std::stod(spec.substr(colon + 1), &used);
        expect(used == spec.size() - colon - 1, "trailing characters");
    }
    catch (std::exception const&)
    {
        throw Error("domain size must be a number in '" + spec + "'");
    }
    expect(v > 0 && std::isfinite(v), "domain size must be > 0 in '" + spec + "'");
    if (kind == "ball")
    {
        return Domain::ball({0, 0, 0}, v);
    }
    if (kind == "cube")
    {
        return Domain::cube({0, 0, 0}, v);
    }
    if (kind == "simplex")
    {
        return Domain::polytope(apply(RigidMotion{}, v, reference_simplex()));
    }
    if (kind == "lshape")
    {
        std::array<double, 1> s{v};
        return lshape_sequence(s).front();
    }
    throw Error("unknown domain kind '" + kind + "'");
}

//---------------------------------------------------------------------------//
namespace detail
{
template<class T>
void read_if(nlohmann::json const& j, char const* key, T& dst)
{
    if (j.contains(key))
    {
        dst = j.at(key).get<T>();
    }
}
}  // namespace detail

/*!
 * Apply a JSON configuration file onto `cfg`.
 *
 * Keys mirror the long flag names with '-' replaced by '_'; the model block
 * is {"name": ..., "params": {...}} and eta is {"a":..,"b":..,"c":..}.
 */
inline void apply_config_json(nlohmann::json const& j, Config& cfg)
{
    expect(j.is_object(), "config must be a JSON object");
    if (j.contains("model"))
    {
        auto const& m = j.at("model");
        if (m.is_string())
        {
            cfg.model = m.get<std::string>();
        }
        else
        {
            detail::read_if(m, "name", cfg.model);
            if (m.contains("params"))
            {
                for (auto const& [k, v] : m.at("params").items())
                {
                    cfg.model_params[k] = v.get<double>();
                }
            }
        }
    }
    detail::read_if(j, "domains", cfg.domains);
    detail::read_if(j, "ell", cfg.ell);
    detail::read_if(j, "L", cfg.L);
    detail::read_if(j, "tau", cfg.tau);
    detail::read_if(j, "delta", cfg.delta);
    detail::read_if(j, "samples", cfg.samples);
    detail::read_if(j, "seed", cfg.seed);
    detail::read_if(j, "g_samples", cfg.g_samples);
    detail::read_if(j, "motions", cfg.motions);
    detail::read_if(j, "reference", cfg.reference);
    detail::read_if(j, "box_sizes", cfg.box_sizes);
    detail::read_if(j, "check", cfg.check);
    detail::read_if(j, "fn", cfg.fn);
    detail::read_if(j, "ground", cfg.ground);
    detail::read_if(j, "trials", cfg.trials);
    detail::read_if(j, "max_block", cfg.max_block);
    detail::read_if(j, "exhaustive", cfg.exhaustive);
    detail::read_if(j, "out", cfg.out);
    detail::read_if(j, "threads", cfg.threads);
    if (j.contains("eta"))
    {
        auto const& e = j.at("eta");
        detail::read_if(e, "a", cfg.eta.a);
        detail::read_if(e, "b", cfg.eta.b);
        detail::read_if(e, "c", cfg.eta.c);
    }
}

inline void load_config_file(std::string const& path, Config& cfg)
{
    std::ifstream in(path);
    expect(in.good(), "cannot open config file '" + path + "'");
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(in);
    }
    catch (std::exception const& e)
    {
        throw Error("invalid config file '" + path + "': " + e.what());
    }
    apply_config_json(j, cfg);
}

//---------------------------------------------------------------------------//
/*!
 * Every violated precondition of the configured command; empty when the
 * configuration is valid.
 */
inline std::vector<Diagnostic> validate_config(Config const& cfg)
{
    std::vector<Diagnostic> out;
    auto bad = [&](std::string field, std::string reason) {
        out.push_back({std::move(field), std::move(reason)});
    };
    auto const& cmds = command_names();
    if (!cfg.command.empty() && std::find(cmds.begin(), cmds.end(), cfg.command) == cmds.end())
    {
        bad("command", "unknown command '" + cfg.command + "'");
    }
    try
    {
        make_model(cfg.model, cfg.model_params);
    }
    catch (std::exception const& e)
    {
        bad("model", e.what());
    }
    for (std::size_t k = 0; k < cfg.domains.size(); ++k)
    {
        try
        {
            parse_domain(cfg.domains[k]);
        }
        catch (std::exception const& e)
        {
            bad("domains[" + std::to_string(k) + "]", e.what());
        }
    }
    if (cfg.ell.empty())
    {
        bad("ell", "ell grid must be nonempty");
    }
    for (std::size_t k = 0; k < cfg.ell.size(); ++k)
    {
        if (!(cfg.ell[k] > 0))
        {
            bad("ell[" + std::to_string(k) + "]", "ell must be > 0");
        }
        else if (k > 0 && !(cfg.ell[k] > cfg.ell[k - 1]))
        {
            bad("ell[" + std::to_string(k) + "]", "ell grid must be increasing");
        }
    }
    for (std::size_t k = 0; k < cfg.L.size(); ++k)
    {
        if (!(cfg.L[k] > 0) || (k > 0 && !(cfg.L[k] > cfg.L[k - 1])))
        {
            bad("L[" + std::to_string(k) + "]", "L grid must be positive and increasing");
        }
    }
    if (!(cfg.tau >= 0))
    {
        bad("tau", "tau must be ≥ 0");
    }
    if (!(cfg.delta > 0))
    {
        bad("delta", "delta must be > 0");
    }
    if (cfg.samples < 2)
    {
        bad("samples", "samples must be >= 2");
    }
    if (cfg.g_samples < 1)
    {
        bad("g_samples", "g_samples must be >= 1");
    }
    if (cfg.motions < 16)
    {
        bad("motions", "motions must be >= 16");
    }
    if (cfg.reference != "simplex" && cfg.reference != "cube")
    {
        bad("reference", "reference must be simplex or cube");
    }
    if (cfg.box_sizes.size() < 2)
    {
        bad("box_sizes", "at least two box sizes required");
    }
    for (std::size_t k = 0; k < cfg.box_sizes.size(); ++k)
    {
        if (cfg.box_sizes[k] < 1 || (k > 0 && cfg.box_sizes[k] <= cfg.box_sizes[k - 1]))
        {
            bad("box_sizes[" + std::to_string(k) + "]", "box sizes must be positive and increasing");
        }
    }
    if (auto e = cfg.eta.check(); !e.empty())
    {
        bad("eta", e);
    }
    static std::vector<std::string> const checks{"A1", "A2", "A3", "A4", "A5", "A6"};
    if (std::find(checks.begin(), checks.end(), cfg.check) == checks.end())
    {
        bad("check", "check must be one of A1..A6");
    }
    auto const& fns = set_function_names();
    if (std::find(fns.begin(), fns.end(), cfg.fn) == fns.end())
    {
        bad("fn", "unknown set function '" + cfg.fn + "'");
    }
    if (cfg.ground < 3 || cfg.ground > 12)
    {
        bad("ground", "ground must be in [3, 12]");
    }
    if (cfg.exhaustive && cfg.ground > 10)
    {
        bad("ground", "exhaustive check limited to 10 elements");
    }
    if (cfg.max_block < 1)
    {
        bad("max_block", "max_block must be >= 1");
    }
    if (cfg.command == "report" && cfg.input.empty())
    {
        bad("in", "report needs an input results file");
    }
    if (cfg.command == "audit" && cfg.check == "A5")
    {
        for (std::size_t k = 0; k < cfg.ell.size(); ++k)
        {
            if (cfg.ell[k] < 1)
            {
                bad("ell[" + std::to_string(k) + "]", "ell must be >= 1");
            }
        }
    }
    return out;
}

}  // namespace thermolim::cli
