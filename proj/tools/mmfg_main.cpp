#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mmfg/builtins.hpp"
#include "mmfg/io.hpp"
#include "mmfg/oracle.hpp"

namespace fs = std::filesystem;
using namespace mmfg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitFailed = 2;   // certified failure: not converged / verification fail
constexpr int kExitBudget = 3;

AnyScenario resolve_scenario(const std::string& spec) {
    if (spec.rfind("builtin:", 0) == 0) {
        std::string name = spec.substr(8);
        if (builtin_is_control(name)) return make_builtin_control(name);
        return make_builtin(name);
    }
    if (!fs::exists(spec)) throw ParseError("scenario not found: " + spec);
    return load_scenario_file(spec);
}

struct CommonFlags {
    std::string scenario;
    std::string out;
    double lambda = 0.05;
    double damping = 0.5;
    double tol = 1e-9;
    int max_iters = 500;
    double tie_q = 0.0;
    double anneal_start = 1.0;
    double anneal_factor = 0.5;
    double anneal_min = 1e-4;
    double eps = 1e-6;
    std::uint64_t seed = 0;
    bool random_init = false;
    std::uint64_t node_budget = kDefaultNodeBudget;
    std::string format = "both";
    bool verbose = false;
};

void add_solver_flags(CLI::App* cmd, CommonFlags& f, bool with_anneal) {
    cmd->add_option("--scenario", f.scenario, "scenario file or builtin:<name>")->required();
    cmd->add_option("--out", f.out, "output directory")->required();
    if (!with_anneal) cmd->add_option("--lambda", f.lambda, "regularization strength");
    cmd->add_option("--damping", f.damping, "fixed-point damping in (0,1]");
    cmd->add_option("--tol", f.tol, "per-lambda convergence tolerance");
    cmd->add_option("--max-iters", f.max_iters, "iteration cap per lambda");
    cmd->add_option("--tie-q", f.tie_q, "stop fraction at minor indifference");
    if (with_anneal) {
        cmd->add_option("--anneal-start", f.anneal_start, "initial lambda");
        cmd->add_option("--anneal-factor", f.anneal_factor, "lambda decay factor");
        cmd->add_option("--anneal-min", f.anneal_min, "final lambda");
        cmd->add_option("--eps", f.eps, "final certificate threshold");
    }
    cmd->add_option("--seed", f.seed, "seed for randomized initialization");
    cmd->add_flag("--random-init", f.random_init, "start from seeded random flows");
    cmd->add_option("--node-budget", f.node_budget, "trajectory-tree node cap");
    cmd->add_option("--format", f.format, "output format: csv, json or both")
        ->check(CLI::IsMember({"csv", "json", "both"}));
    cmd->add_flag("--verbose", f.verbose, "print one line per iteration");
}

SolveConfig config_of(const CommonFlags& f, bool anneal) {
    SolveConfig cfg;
    cfg.lambda = f.lambda;
    cfg.damping = f.damping;
    cfg.tol = f.tol;
    cfg.max_iters = f.max_iters;
    cfg.tie_q = f.tie_q;
    cfg.seed = f.seed;
    cfg.random_init = f.random_init;
    cfg.eps_final = f.eps;
    if (anneal) cfg.anneal = AnnealSchedule{f.anneal_start, f.anneal_factor, f.anneal_min};
    if (f.verbose)
        cfg.on_iteration = [](double lam, int iter, double delta, double cons) {
            std::cerr << "lambda=" << util::format_double(lam) << " iter=" << iter
                      << " delta=" << util::format_double(delta)
                      << " consistency=" << util::format_double(cons) << "\n";
        };
    return cfg;
}

void write_outputs(const fs::path& dir, const std::string& format, const Scenario& s,
                   const PathSpace& space, const EquilibriumReport& rep) {
    if (format != "csv") write_text_file((dir / "report.json").string(), report_to_json(rep));
    if (format == "json") return;
    write_text_file((dir / "nodes.csv").string(), export_nodes_csv(space, s.major_states));
    write_text_file((dir / "policy.csv").string(), export_policy_csv(rep.alpha));
    write_text_file((dir / "mu.csv").string(), export_mean_field_csv(rep.mu));
    write_text_file((dir / "m.csv").string(), export_mean_field_csv(rep.m));
    write_text_file((dir / "marginal.csv").string(), export_marginal_csv(rep.p));
    write_text_file((dir / "occupation.csv").string(), export_occupation_csv(rep.flow));
    MajorValue v = solve_regularized(s, space, rep.mu, rep.m, rep.lambda > 0 ? rep.lambda : 1e-6).value;
    if (rep.annealed) v = solve_unregularized(s, space, rep.mu, rep.m).first;
    write_text_file((dir / "values.csv").string(), export_values_csv(v));
}

void write_outputs(const fs::path& dir, const std::string& format, const ControlScenario& cs,
                   const PathSpace& space, const ControlEquilibriumReport& rep) {
    if (format != "csv") write_text_file((dir / "report.json").string(), report_to_json(rep));
    if (format == "json") return;
    write_text_file((dir / "nodes.csv").string(), export_nodes_csv(space, cs.major_states));
    write_text_file((dir / "policy.csv").string(), export_policy_csv(rep.alpha0));
    write_text_file((dir / "state_action.csv").string(),
                    export_state_action_csv(rep.v, cs.n_minor(), cs.n_minor_actions()));
}

int run_solve(const CommonFlags& f, bool anneal) {
    AnyScenario any = resolve_scenario(f.scenario);
    SolveConfig cfg = config_of(f, anneal);
    cfg.check();
    if (!anneal && cfg.lambda <= 0.0) {
        std::cerr << "error: the regularized solve requires --lambda > 0; use `anneal` to approach "
                     "the unregularized problem\n";
        return kExitInput;
    }
    fs::create_directories(f.out);
    bool converged = false;
    if (std::holds_alternative<Scenario>(any)) {
        const Scenario& s = std::get<Scenario>(any);
        PathSpace space = build_path_space(s, f.node_budget);
        EquilibriumReport rep = anneal ? anneal_to_relaxed(s, space, cfg)
                                       : solve_regularized_equilibrium(s, space, cfg);
        write_outputs(f.out, f.format, s, space, rep);
        converged = rep.converged;
        std::cout << "scenario=" << s.name << " lambda=" << util::format_double(rep.lambda)
                  << " iterations=" << rep.iterations << " converged=" << (converged ? "yes" : "no")
                  << " major_value=" << util::format_double(rep.major_value)
                  << " minor_value=" << util::format_double(rep.minor_value) << "\n";
    } else {
        const ControlScenario& cs = std::get<ControlScenario>(any);
        PathSpace space = build_control_path_space(cs, f.node_budget);
        ControlEquilibriumReport rep = solve_control_equilibrium(cs, space, cfg);
        write_outputs(f.out, f.format, cs, space, rep);
        converged = rep.converged;
        std::cout << "scenario=" << cs.name << " lambda=" << util::format_double(rep.lambda)
                  << " iterations=" << rep.iterations << " converged=" << (converged ? "yes" : "no")
                  << " major_value=" << util::format_double(rep.major_value)
                  << " minor_value=" << util::format_double(rep.minor_value) << "\n";
    }
    return converged ? kExitOk : kExitFailed;
}

MajorPolicy parse_major_policy(const Scenario& s, const PathSpace& space, const std::string& spec) {
    if (spec == "never") return stop_policy_never(s, space);
    if (spec == "uniform")
        return MajorPolicy::uniform(space, s.actions.size(), s.actions.total_volume());
    if (spec.rfind("stop@", 0) == 0) return stop_policy_at(s, space, std::stoi(spec.substr(5)));
    if (spec.rfind("family:", 0) == 0)
        return paper_family_policy(s, space, std::stod(spec.substr(7)));
    throw ParseError("unknown major policy \"" + spec + "\" (never, uniform, stop@K, family:p)");
}

int run_oracle(const std::string& scenario_spec, const std::string& major_spec,
               std::uint64_t max_rules, int grid_points, const std::string& out) {
    AnyScenario any = resolve_scenario(scenario_spec);
    if (std::holds_alternative<Scenario>(any)) {
        const Scenario& s = std::get<Scenario>(any);
        PathSpace space = build_path_space(s);
        MajorPolicy alpha = parse_major_policy(s, space, major_spec);
        MeanFieldFlow mu = MeanFieldFlow::uniform(space, s.n_minor(), true);
        MeanFieldFlow m = MeanFieldFlow::uniform(space, s.n_minor(), false);
        auto res = oracle::enumerate_stopping_rules(s, space, mu, m, alpha, max_rules);
        std::cout << "oracle_value=" << util::format_double(res.value) << " rules=" << res.rules
                  << " best_rule=" << res.best_rule << "\n";
        if (!out.empty()) {
            fs::create_directories(out);
            std::string body = "{\n  \"value\": " + util::format_double(res.value) +
                               ",\n  \"rules\": " + std::to_string(res.rules) +
                               ",\n  \"best_rule\": " + std::to_string(res.best_rule) + "\n}\n";
            write_text_file((fs::path(out) / "oracle.json").string(), body);
        }
    } else {
        const ControlScenario& cs = std::get<ControlScenario>(any);
        PathSpace space = build_control_path_space(cs);
        auto res = oracle::control_grid_search(cs, space, grid_points, max_rules);
        std::cout << "oracle_phi=" << util::format_double(res.phi)
                  << " residual=" << util::format_double(res.residual)
                  << " major_value=" << util::format_double(res.major_value)
                  << " minor_value=" << util::format_double(res.minor_value) << "\n";
        if (!out.empty()) {
            fs::create_directories(out);
            std::string body = "{\n  \"phi\": " + util::format_double(res.phi) +
                               ",\n  \"residual\": " + util::format_double(res.residual) + "\n}\n";
            write_text_file((fs::path(out) / "oracle.json").string(), body);
        }
    }
    return kExitOk;
}

int run_verify(const std::string& scenario_spec, const std::string& report_path, double eps) {
    AnyScenario any = resolve_scenario(scenario_spec);
    std::string text = read_text_file(report_path);
    bool pass = false;
    if (json_report_is_control(text)) {
        if (!std::holds_alternative<ControlScenario>(any))
            throw ShapeMismatch("control report paired with a stopping scenario");
        const ControlScenario& cs = std::get<ControlScenario>(any);
        PathSpace space = build_control_path_space(cs);
        ControlEquilibriumReport rep = control_report_from_json(text);
        ControlCertificate cert = verify_control(rep, cs, space, eps);
        std::cout << "major: " << (cert.major.ok ? "pass" : "FAIL")
                  << " slack=" << util::format_double(cert.major.slack) << "\n"
                  << "minor: " << (cert.minor.ok ? "pass" : "FAIL")
                  << " slack=" << util::format_double(cert.minor.slack) << "\n"
                  << "consistency: " << (cert.consistency.ok ? "pass" : "FAIL")
                  << " slack=" << util::format_double(cert.consistency.slack) << "\n";
        pass = cert.pass();
    } else {
        if (!std::holds_alternative<Scenario>(any))
            throw ShapeMismatch("stopping report paired with a control scenario");
        const Scenario& s = std::get<Scenario>(any);
        PathSpace space = build_path_space(s);
        EquilibriumReport rep = report_from_json(text);
        Certificate cert = verify(rep, s, space, eps);
        std::cout << "major: " << (cert.major.ok ? "pass" : "FAIL")
                  << " slack=" << util::format_double(cert.major.slack) << "\n"
                  << "minor: " << (cert.minor.ok ? "pass" : "FAIL")
                  << " slack=" << util::format_double(cert.minor.slack) << "\n"
                  << "consistency: " << (cert.consistency.ok ? "pass" : "FAIL")
                  << " slack=" << util::format_double(cert.consistency.slack) << "\n";
        pass = cert.pass();
    }
    return pass ? kExitOk : kExitFailed;
}

int run_export(const std::string& scenario_spec, const std::string& report_path,
               const std::string& out) {
    AnyScenario any = resolve_scenario(scenario_spec);
    std::string report_text = report_path.empty() ? "" : read_text_file(report_path);
    fs::create_directories(out);
    if (std::holds_alternative<Scenario>(any)) {
        const Scenario& s = std::get<Scenario>(any);
        PathSpace space = build_path_space(s);
        write_text_file((fs::path(out) / "nodes.csv").string(),
                        export_nodes_csv(space, s.major_states));
        write_text_file((fs::path(out) / "scenario.json").string(), scenario_to_json(s));
        MeanFieldFlow mu = MeanFieldFlow::uniform(space, s.n_minor(), true);
        MeanFieldFlow m = MeanFieldFlow::uniform(space, s.n_minor(), false);
        MajorPolicy alpha = MajorPolicy::uniform(space, s.actions.size(), s.actions.total_volume());
        if (!report_text.empty()) {
            EquilibriumReport rep = report_from_json(report_text);
            write_outputs(out, "csv", s, space, rep);
            mu = rep.mu;
            m = rep.m;
            alpha = rep.alpha;
        }
        LinearSystem sys = assemble_constraints(s, space, m, alpha);
        write_text_file((fs::path(out) / "lp_constraints.txt").string(),
                        dump_linear_system(sys, minor_objective(s, space, mu, m, sys)));
    } else {
        const ControlScenario& cs = std::get<ControlScenario>(any);
        PathSpace space = build_control_path_space(cs);
        write_text_file((fs::path(out) / "nodes.csv").string(),
                        export_nodes_csv(space, cs.major_states));
        write_text_file((fs::path(out) / "scenario.json").string(), scenario_to_json(cs));
        if (!report_text.empty()) {
            ControlEquilibriumReport rep = control_report_from_json(report_text);
            write_outputs(out, "csv", cs, space, rep);
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solver for discrete-time major-minor mean-field games of stopping and control"};
    app.require_subcommand(1);

    CommonFlags sf, af;
    auto* solve = app.add_subcommand("solve", "regularized equilibrium at a fixed lambda");
    add_solver_flags(solve, sf, false);
    auto* anneal = app.add_subcommand("anneal", "anneal lambda toward the relaxed equilibrium");
    add_solver_flags(anneal, af, true);

    std::string v_scenario, v_report;
    double v_eps = 1e-6;
    auto* verify_cmd = app.add_subcommand("verify", "re-check a report's equilibrium certificate");
    verify_cmd->add_option("--scenario", v_scenario)->required();
    verify_cmd->add_option("--report", v_report, "report.json produced by solve/anneal")->required();
    verify_cmd->add_option("--eps", v_eps, "certificate threshold");

    std::string o_scenario, o_major = "never", o_out;
    std::uint64_t o_max_rules = 100000;
    int o_grid = 101;
    auto* oracle_cmd = app.add_subcommand("oracle", "brute-force reference solver (small instances)");
    oracle_cmd->add_option("--scenario", o_scenario)->required();
    oracle_cmd->add_option("--major", o_major, "major policy: never, uniform, stop@K, family:p");
    oracle_cmd->add_option("--max-rules", o_max_rules, "stopping-rule budget");
    oracle_cmd->add_option("--grid-points", o_grid, "control feature grid size");
    oracle_cmd->add_option("--out", o_out, "optional output directory");

    std::string e_scenario, e_report, e_out;
    auto* export_cmd = app.add_subcommand("export", "write path-space and report CSVs");
    export_cmd->add_option("--scenario", e_scenario)->required();
    export_cmd->add_option("--report", e_report, "optional report.json to export");
    export_cmd->add_option("--out", e_out)->required();

    auto* scenarios_cmd = app.add_subcommand("scenarios", "list built-in scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInput;
    }

    try {
        if (solve->parsed()) return run_solve(sf, false);
        if (anneal->parsed()) return run_solve(af, true);
        if (verify_cmd->parsed()) return run_verify(v_scenario, v_report, v_eps);
        if (oracle_cmd->parsed()) return run_oracle(o_scenario, o_major, o_max_rules, o_grid, o_out);
        if (export_cmd->parsed()) return run_export(e_scenario, e_report, e_out);
        if (scenarios_cmd->parsed()) {
            for (const auto& name : builtin_names())
                std::cout << name << (builtin_is_control(name) ? " (control)" : " (stopping)")
                          << "\n";
            return kExitOk;
        }
    } catch (const CapacityError& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return kExitBudget;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}
