#pragma once

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "../harness.hpp"
#include "../models.hpp"
#include "../ssa.hpp"
#include "../tiling.hpp"
#include "config.hpp"

namespace thermolim::cli
{
inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

namespace detail
{
inline char const* verdict(bool pass) { return pass ? "PASS" : "FAIL"; }

inline std::string fmt(double v) { return format_number(v); }

//! Frame with Haar rotation and translation uniform in the cell, from `seed`.
inline TilingFrame random_frame(std::uint64_t seed, double ell, double tau)
{
    CounterRng rng(seed, Stream::experiment, 0);
    Rotation r = sample_rotation(rng);
    Vec3 w = uniform3(rng);
    return {RigidMotion(r, w * ell), ell, tau};
}

inline Domain domain_or(Config const& cfg, std::string const& fallback)
{
    return parse_domain(cfg.domains.empty() ? fallback : cfg.domains.front());
}

inline bool is_local(EnergyModel const& m)
{
    return m.name().rfind("local", 0) == 0 || m.name() == "volume";
}

inline void print_rows(std::ostream& out, AuditReport const& rep)
{
    for (auto const& r : rep.rows)
    {
        out << "  " << verdict(r.pass) << "  " << r.label << "  value=" << fmt(r.value)
            << " bound=" << fmt(r.bound) << " margin=" << fmt(r.margin)
            << " stderr=" << fmt(r.std_error) << '\n';
    }
}

inline int finish_audit(std::ostream& out, AuditReport const& rep)
{
    print_rows(out, rep);
    out << rep.check << ": " << verdict(rep.pass) << '\n';
    if (!rep.pass)
    {
        out << "worst: " << rep.witness() << '\n';
    }
    return rep.pass ? kExitPass : kExitFail;
}

inline void print_curve(std::ostream& out, LimitCurve const& c)
{
    out << std::setw(10) << "param" << std::setw(26) << "mean" << std::setw(26) << "stderr"
        << std::setw(26) << "spread" << std::setw(26) << "residual" << '\n';
    for (auto const& r : c.rows)
    {
        out << std::setw(10) << fmt(r.param) << std::setw(26) << fmt(r.mean) << std::setw(26)
            << fmt(r.std_error) << std::setw(26) << fmt(r.spread) << std::setw(26)
            << fmt(r.residual) << '\n';
    }
}

inline void persist_if(Config const& cfg, std::vector<ExperimentRecord> const& recs)
{
    if (!cfg.out.empty())
    {
        persist(cfg.out, recs);
    }
}
}  // namespace detail

//---------------------------------------------------------------------------//
// Commands
//---------------------------------------------------------------------------//

inline int cmd_audit(Config const& cfg, std::ostream& out)
{
    auto model = make_model(cfg.model, cfg.model_params);
    Quality q{cfg.samples, cfg.seed};
    if (cfg.check == "A1")
    {
        return detail::finish_audit(out, audit_A1_normalization(*model));
    }
    if (cfg.check == "A2")
    {
        std::vector<Domain> suite;
        for (auto const& s : cfg.domains)
        {
            suite.push_back(parse_domain(s));
        }
        if (suite.empty())
        {
            suite = standard_domain_suite();
        }
        return detail::finish_audit(out, audit_A2_stability(*model, suite, q));
    }
    if (cfg.check == "A3")
    {
        auto omega = detail::domain_or(cfg, "cube:0.3");
        auto rep = audit_A3_translation_average(*model, omega, cfg.L,
                                                cfg.motions, q);
        for (auto const& r : rep.rows)
        {
            out << "  L=" << detail::fmt(r.radius) << " average=" << detail::fmt(r.average)
                << " stderr=" << detail::fmt(r.std_error)
                << " deviation=" << detail::fmt(r.deviation) << '\n';
        }
        out << "A3: " << detail::verdict(rep.decreasing) << '\n';
        if (!rep.decreasing)
        {
            out << "worst: deviation does not decrease with L\n";
        }
        return rep.decreasing ? kExitPass : kExitFail;
    }
    if (cfg.check == "A4")
    {
        auto omega = detail::domain_or(cfg, "ball:6");
        auto frame = detail::random_frame(cfg.seed, cfg.ell.front(), cfg.tau);
        auto inner = inner_approximation(omega, frame, cfg.delta, {}, cfg.samples, cfg.seed);
        return detail::finish_audit(
            out, audit_A4_continuity(*model, omega, inner.union_domain, model->kappa(), 0.0,
                                     cfg.delta, q));
    }
    if (cfg.check == "A5")
    {
        auto omega = detail::domain_or(cfg, "ball:3");
        AuditReport all{"A5", "regular domains", {}, true};
        SubaverageOptions opt;
        opt.equality = detail::is_local(*model);
        opt.outer_samples = cfg.samples;
        for (std::size_t k = 0; k < cfg.ell.size(); ++k)
        {
            auto rep = audit_A5_subaverage(*model, omega, cfg.ell[k], cfg.motions,
                                           derive_seed(cfg.seed, k), opt);
            out << "  ell=" << detail::fmt(cfg.ell[k]) << " fitted_alpha="
                << detail::fmt(rep.alpha_fitted) << " slack=" << detail::fmt(rep.slack) << '\n';
            for (auto const& r : rep.audit.rows)
            {
                all.add(r);
            }
        }
        return detail::finish_audit(out, all);
    }
    auto omega = detail::domain_or(cfg, "cube:10");
    auto frame = detail::random_frame(cfg.seed, cfg.ell.front(), cfg.tau);
    A6Options opt;
    opt.quality = q;
    auto rep = audit_A6(*model, omega, frame, cfg.g_samples, cfg.seed, opt);
    out << "  tiles=" << rep.tiles << " energy=" << detail::fmt(rep.energy)
        << " assembled=" << detail::fmt(rep.assembled)
        << " exact_regrouping=" << (rep.exact_regrouping ? "yes" : "no")
        << " cell_average=" << detail::fmt(rep.cell_average) << " +- "
        << detail::fmt(rep.cell_average_se) << '\n';
    return detail::finish_audit(out, rep.audit);
}

inline int cmd_limit_ref(Config const& cfg, std::ostream& out)
{
    auto model = make_model(cfg.model, cfg.model_params);
    Polytope ref = cfg.reference == "cube" ? reference_cube() : reference_simplex();
    auto curve = reference_limit_experiment(*model, cfg.ell, cfg.g_samples,
                                            {cfg.samples, cfg.seed}, cfg.seed, ref,
                                            cfg.reference);
    detail::print_curve(out, curve);
    out << "e_bar=" << detail::fmt(curve.e_bar) << " +- " << detail::fmt(curve.e_bar_se)
        << "  spread_non_increasing=" << (spread_non_increasing(curve) ? "yes" : "no") << '\n';
    detail::persist_if(cfg, curve.records);
    return kExitPass;
}

inline int cmd_limit_general(Config const& cfg, std::ostream& out)
{
    auto model = make_model(cfg.model, cfg.model_params);
    std::vector<std::string> specs = cfg.domains;
    if (specs.empty())
    {
        specs = {"ball:3", "ball:6", "ball:12"};
    }
    std::vector<Domain> seq;
    for (auto const& s : specs)
    {
        seq.push_back(parse_domain(s));
    }
    GeneralOptions opt;
    opt.eta = cfg.eta;
    opt.regularity_samples = cfg.samples;
    opt.e_bar = exact_limit_oracle(*model, cfg.box_sizes, {cfg.samples, cfg.seed});
    GeneralLimitResult res;
    try
    {
        res = general_limit_experiment(*model, seq, {cfg.samples, cfg.seed}, cfg.seed, opt);
    }
    catch (Error const& e)
    {
        out << "limit-general: FAIL\nworst: " << e.what() << '\n';
        return kExitFail;
    }
    detail::print_curve(out, res.curve);
    for (std::size_t n = 0; n < seq.size(); ++n)
    {
        out << "  " << specs[n] << " diameter_ratio=" << detail::fmt(res.diameter_ratio[n])
            << '\n';
    }
    out << "terminal=" << detail::fmt(res.terminal) << " e_bar=" << detail::fmt(*opt.e_bar)
        << " gap=" << detail::fmt(res.gap) << '\n';
    detail::persist_if(cfg, res.curve.records);
    return kExitPass;
}

inline int cmd_ssa(Config const& cfg, std::ostream& out)
{
    auto fn = make_set_function(cfg.fn, cfg.ground, cfg.seed);
    SSAReport ssa = cfg.exhaustive ? audit_ssa_exhaustive(fn)
                                   : audit_ssa(fn, cfg.trials, cfg.max_block, cfg.seed);
    auto chain = derived_chain_audit(fn, cfg.trials, derive_seed(cfg.seed, 1));
    auto lemma = lemmaT_exhaustive(fn, static_cast<int>(std::min<std::size_t>(cfg.ground, 6)));
    std::size_t violations = ssa.violations;
    for (auto const* rep : {&chain, &lemma})
    {
        for (auto const& r : rep->rows)
        {
            violations += r.pass ? 0 : 1;
        }
    }
    out << "SSA: " << ssa.trials << " triples, worst violation "
        << detail::fmt(ssa.worst.violation) << " at " << mask_string(ssa.worst.p1, fn.ground)
        << ' ' << mask_string(ssa.worst.p2, fn.ground) << ' '
        << mask_string(ssa.worst.p3, fn.ground) << '\n';
    out << "chain: " << detail::verdict(chain.pass) << " (" << chain.rows.size() << " rows)\n";
    out << "lemmaT: " << detail::verdict(lemma.pass) << '\n';
    out << violations << " violations\n";
    bool pass = ssa.audit.pass && chain.pass && lemma.pass;
    if (!pass)
    {
        for (auto const* rep : {&ssa.audit, &chain, &lemma})
        {
            if (!rep->pass)
            {
                out << "worst: " << rep->witness() << '\n';
            }
        }
    }
    return pass ? kExitPass : kExitFail;
}

inline int cmd_tiling_check(Config const& cfg, std::ostream& out)
{
    auto cover = orbit_cover_check(cfg.samples, cfg.seed);
    out << "orbit: volume_sum=" << detail::fmt(cover.volume_sum)
        << " double_cover=" << detail::fmt(cover.double_cover)
        << " uncovered=" << detail::fmt(cover.uncovered) << "  " << detail::verdict(cover.pass)
        << '\n';
    bool pass = cover.pass;
    for (auto const& spec : cfg.domains)
    {
        auto omega = parse_domain(spec);
        double prev = -1;
        bool monotone = true;
        for (std::size_t k = 0; k < cfg.ell.size(); ++k)
        {
            auto frame = detail::random_frame(cfg.seed, cfg.ell[k], cfg.tau);
            auto a = inner_approximation(omega, frame, cfg.delta, {}, cfg.samples, cfg.seed);
            double miss = uncovered_fraction(omega, a, cfg.samples, cfg.seed);
            out << "  " << spec << " ell=" << detail::fmt(cfg.ell[k]) << " tiles="
                << a.kept.size() << " uncovered=" << detail::fmt(miss) << '\n';
            monotone = monotone && miss >= prev;
            prev = miss;
        }
        out << "  " << spec << " uncovered fraction monotone in ell: "
            << detail::verdict(monotone) << '\n';
        pass = pass && monotone;
    }
    out << "tiling-check: " << detail::verdict(pass) << '\n';
    return pass ? kExitPass : kExitFail;
}

inline int cmd_lower_bound(Config const& cfg, std::ostream& out)
{
    auto model = make_model(cfg.model, cfg.model_params);
    auto omega = detail::domain_or(cfg, "ball:8");
    double ell = cfg.ell.front();
    LowerBoundOptions opt;
    opt.samples = cfg.samples;
    opt.shell_samples = cfg.samples;
    auto rep = lower_bound_diagnostic(*model, omega, ell, cfg.seed, opt);
    out << "energy_density=" << detail::fmt(rep.energy_density) << " +- "
        << detail::fmt(rep.energy_density_se) << '\n'
        << "e_av=" << detail::fmt(rep.e_av) << " +- " << detail::fmt(rep.e_av_se) << '\n'
        << "margin=" << detail::fmt(rep.margin) << " +- " << detail::fmt(rep.margin_se)
        << " shell_fraction=" << detail::fmt(rep.shell_fraction) << '\n'
        << "lower-bound: " << detail::verdict(rep.pass) << '\n';
    std::vector<ExperimentRecord> recs(2);
    for (std::size_t k = 0; k < 2; ++k)
    {
        auto& r = recs[k];
        r.experiment = k == 0 ? "lower-bound-domain" : "lower-bound-average";
        r.model = model->name();
        r.params = model->params();
        r.domain = omega.describe();
        r.param = ell;
        r.normalized = k == 0 ? rep.energy_density : rep.e_av;
        r.value = r.normalized;
        r.std_error = k == 0 ? rep.energy_density_se : rep.e_av_se;
        r.volume = 1;
        r.seed = cfg.seed;
        r.ball_radius = opt.ball_radius;
    }
    detail::persist_if(cfg, recs);
    if (!rep.pass)
    {
        out << "worst: margin " << detail::fmt(rep.margin) << " below -(shell "
            << detail::fmt(rep.shell_fraction) << " + 3 stderr)\n";
    }
    return rep.pass ? kExitPass : kExitFail;
}

inline int cmd_report(Config const& cfg, std::ostream& out)
{
    auto recs = read_records(cfg.input);
    print_report(out, summarize(recs));
    if (!cfg.csv.empty())
    {
        std::ofstream csv(cfg.csv, std::ios::binary);
        expect(csv.good(), "cannot open csv file '" + cfg.csv + "'");
        write_csv(csv, recs);
    }
    return kExitPass;
}

//---------------------------------------------------------------------------//
/*!
 * Parse arguments, validate, and dispatch one subcommand.
 *
 * Exit codes: 0 pass, 1 audit failure, 2 usage or configuration error.
 */
inline int run(int argc, char const* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Thermodynamic-limit verification runner", "thermolim"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string model;
    std::vector<std::string> params;
    std::vector<std::string> domains;
    std::vector<double> ell, L;
    double tau{}, delta{}, eta_a{}, eta_b{}, eta_c{};
    std::size_t samples{}, g_samples{}, ground{}, trials{}, max_block{}, motions{};
    std::uint64_t seed{};
    std::vector<int> box_sizes;
    std::string reference, check, fn, out_path, csv, input;
    unsigned threads{};

    std::vector<std::pair<CLI::Option*, std::function<void(Config&)>>> bound;
    auto opt = [&](std::string name, auto& var, std::string desc, auto apply) {
        CLI::Option* o = app.add_option(name, var, desc);
        bound.emplace_back(o, apply);
        return o;
    };
    app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    opt("--model", model, "energy model name", [&](Config& c) { c.model = model; });
    opt("--param", params, "model parameter key=value (repeatable)", [&](Config& c) {
        for (auto const& p : params)
        {
            auto eq = p.find('=');
            expect(eq != std::string::npos, "--param expects key=value, got '" + p + "'");
            try
            {
                c.model_params[p.substr(0, eq)] = std::stod(p.substr(eq + 1));
            }
            catch (std::invalid_argument const&)
            {
                throw Error("--param value must be a number in '" + p + "'");
            }
        }
    });
    opt("--domain", domains, "domain spec kind:size (ball, cube, simplex, lshape)",
        [&](Config& c) { c.domains = domains; })
        ->delimiter(',');
    opt("--ell", ell, "tile scale grid", [&](Config& c) { c.ell = ell; })->delimiter(',');
    opt("--L", L, "translation-ball radii for A3", [&](Config& c) { c.L = L; })
        ->delimiter(',');
    opt("--tau", tau, "tile inflation", [&](Config& c) { c.tau = tau; });
    opt("--delta", delta, "inner-approximation margin", [&](Config& c) { c.delta = delta; });
    opt("--samples", samples, "samples per estimate", [&](Config& c) { c.samples = samples; });
    opt("--seed", seed, "master seed", [&](Config& c) { c.seed = seed; });
    opt("--g-samples", g_samples, "sampled motions per ell",
        [&](Config& c) { c.g_samples = g_samples; });
    opt("--reference", reference, "reference set (simplex or cube)",
        [&](Config& c) { c.reference = reference; });
    opt("--box-sizes", box_sizes, "box sizes for the limit oracle",
        [&](Config& c) { c.box_sizes = box_sizes; })
        ->delimiter(',');
    opt("--eta-a", eta_a, "eta coefficient a", [&](Config& c) { c.eta.a = eta_a; });
    opt("--eta-b", eta_b, "eta exponent b", [&](Config& c) { c.eta.b = eta_b; });
    opt("--eta-c", eta_c, "eta range c", [&](Config& c) { c.eta.c = eta_c; });
    opt("--check", check, "audit to run (A1..A6)", [&](Config& c) { c.check = check; });
    opt("--fn", fn, "set function fixture", [&](Config& c) { c.fn = fn; });
    opt("--ground", ground, "ground set size", [&](Config& c) { c.ground = ground; });
    opt("--trials", trials, "random trials", [&](Config& c) { c.trials = trials; });
    opt("--max-block", max_block, "largest random block",
        [&](Config& c) { c.max_block = max_block; });
    opt("--out", out_path, "results file (appended)", [&](Config& c) { c.out = out_path; });
    opt("--csv", csv, "CSV output path for report", [&](Config& c) { c.csv = csv; });
    opt("--in", input, "results file to report on", [&](Config& c) { c.input = input; });
    opt("--threads", threads, "worker cap (default THERMOLIM_THREADS or all cores)",
        [&](Config& c) { c.threads = threads; });
    opt("--motions", motions, "sampled motions for A3 and A5",
        [&](Config& c) { c.motions = motions; });
    bool exhaustive = false;
    auto* ex = app.add_flag("--exhaustive", exhaustive, "enumerate every disjoint triple");

    std::map<std::string, std::string> const about{
        {"audit", "run one assumption audit (--check A1..A6)"},
        {"limit-ref", "energy per volume on scaled reference sets"},
        {"limit-general", "energy per volume along a regular domain sequence"},
        {"ssa", "strong subadditivity audit of a set function"},
        {"tiling-check", "orbit cover and inner-approximation coverage"},
        {"lower-bound", "averaged lower-bound diagnostic"},
        {"report", "summarize a results file"}};
    for (auto const& name : command_names())
    {
        app.add_subcommand(name, about.at(name))->fallthrough();
    }

    std::string const usage = app.help();
    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::CallForHelp const&)
    {
        out << usage;
        return kExitPass;
    }
    catch (CLI::ParseError const& e)
    {
        err << "error: " << e.what() << "\n\n" << usage;
        return kExitUsage;
    }

    Config cfg;
    try
    {
        if (!config_path.empty())
        {
            load_config_file(config_path, cfg);
        }
        for (auto& [o, apply] : bound)
        {
            if (o->count() > 0)
            {
                apply(cfg);
            }
        }
        if (ex->count() > 0)
        {
            cfg.exhaustive = exhaustive;
        }
    }
    catch (std::exception const& e)
    {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    cfg.command = app.get_subcommands().front()->get_name();

    auto diags = validate_config(cfg);
    if (!diags.empty())
    {
        for (auto const& d : diags)
        {
            err << "config error: " << d << '\n';
        }
        return kExitUsage;
    }

    unsigned nthreads = cfg.threads;
    if (nthreads == 0)
    {
        if (char const* env = std::getenv("THERMOLIM_THREADS"))
        {
            try
            {
                nthreads = static_cast<unsigned>(std::stoul(env));
            }
            catch (std::exception const&)
            {
                err << "error: THERMOLIM_THREADS must be a nonnegative integer\n";
                return kExitUsage;
            }
        }
    }
    set_thread_count(nthreads);

    try
    {
        if (cfg.command == "audit")
        {
            return cmd_audit(cfg, out);
        }
        if (cfg.command == "limit-ref")
        {
            return cmd_limit_ref(cfg, out);
        }
        if (cfg.command == "limit-general")
        {
            return cmd_limit_general(cfg, out);
        }
        if (cfg.command == "ssa")
        {
            return cmd_ssa(cfg, out);
        }
        if (cfg.command == "tiling-check")
        {
            return cmd_tiling_check(cfg, out);
        }
        if (cfg.command == "lower-bound")
        {
            return cmd_lower_bound(cfg, out);
        }
        return cmd_report(cfg, out);
    }
    catch (std::exception const& e)
    {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

}  // namespace thermolim::cli
