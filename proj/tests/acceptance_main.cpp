// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. Every tolerance is pinned here, in code.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "mmfg/builtins.hpp"
#include "mmfg/io.hpp"
#include "mmfg/oracle.hpp"
#include "support/instances.hpp"

using namespace mmfg;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int number, const std::string& name, bool ok, const std::string& detail = "") {
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << number << ": " << name;
    if (!detail.empty()) std::cout << " [" << detail << "]";
    std::cout << "\n";
    if (!ok) ++failures;
}

// 1. worked-example reproduction at 1e-12
void criterion_paper_example() {
    Scenario s = make_builtin("paper-ex-2.1");
    PathSpace sp = build_path_space(s);
    MeanFieldFlow mu = MeanFieldFlow::uniform(sp, 1, true);
    MeanFieldFlow m = MeanFieldFlow::uniform(sp, 1, false);

    auto [value, sets] = solve_unregularized(s, sp, mu, m);
    bool ok = value.v[0][0] == 1.0;

    // case 1 major (holds to the last exit): the minor stops immediately
    MajorPolicy alpha0 = paper_family_policy(s, sp, 0.0);
    DpSolution br0 = solve_dp(s, sp, mu, m, alpha0);
    double v_br0 = minor_reward(s, sp, br0.flow, mu, m);
    ok = ok && std::fabs(v_br0 - 0.5) <= 1e-12;
    ok = ok && std::fabs(br0.flow.mu_tilde[0][0][0] - 1.0) <= 1e-12;

    // case 2 major (exits at once, visible at t=1): the minor stops at t=1
    MajorPolicy alpha1 = paper_family_policy(s, sp, 1.0);
    DpSolution br1 = solve_dp(s, sp, mu, m, alpha1);
    double v_br1 = minor_reward(s, sp, br1.flow, mu, m);
    double stopped_at_1 = 0.0;
    for (std::size_t u = 0; u < sp.slice_size(1); ++u) stopped_at_1 += br1.flow.mu_tilde[1][u][0];
    ok = ok && std::fabs(v_br1 - 1.0) <= 1e-12 && std::fabs(stopped_at_1 - 1.0) <= 1e-12;

    std::ostringstream d;
    d << "V=" << value.v[0][0] << " br(case1)=" << v_br0 << " br(case2)=" << v_br1;
    report(1, "paper example reproduction", ok, d.str());
}

// 2. non-convexity of the fixed-point map
void criterion_nonconvexity() {
    Scenario s = make_builtin("paper-ex-2.1");
    PathSpace sp = build_path_space(s);
    NonConvexityOutcome out = nonconvexity_regression(s, sp);
    std::ostringstream d;
    d << "min midpoint gap " << out.min_midpoint_gap;
    report(2, "non-convexity regression", out.reproduced && out.min_midpoint_gap > 0.05, d.str());
}

// 3. annealed relaxed equilibrium, certified at 1e-3, under 5 seconds
void criterion_annealed() {
    auto t0 = std::chrono::steady_clock::now();
    Scenario s = make_builtin("paper-ex-2.1");
    PathSpace sp = build_path_space(s);
    SolveConfig cfg;
    cfg.anneal = AnnealSchedule{1.0, 0.5, 1e-4};
    EquilibriumReport rep = anneal_to_relaxed(s, sp, cfg);
    Certificate cert = verify(rep, s, sp, 1e-3);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    bool ok = rep.converged && cert.pass() && rep.alpha.weights[0][0][1] <= 1e-3 && secs <= 5.0;
    std::ostringstream d;
    d << "slacks " << cert.major.slack << "/" << cert.minor.slack << "/" << cert.consistency.slack
      << ", exit-now mass " << rep.alpha.weights[0][0][1] << ", " << secs << "s";
    report(3, "annealed relaxed equilibrium on the worked example", ok, d.str());
}

// 4 + 5. randomized DP/LP/enumeration equivalence and flow invariants
void criterion_randomized_suite() {
    util::Rng rng(2024);
    bool ok4 = true, ok5 = true;
    int oracle_checked = 0;
    double worst_dp_lp = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        Scenario s = testsupport::random_scenario(rng, rng.uniform_int(1, 4),
                                                  rng.uniform_int(1, 2), rng.uniform_int(1, 3),
                                                  /*coupled=*/rep % 2 == 0);
        PathSpace sp = build_path_space(s);
        MeanFieldFlow mu = MeanFieldFlow::uniform(sp, s.n_minor(), true);
        MeanFieldFlow m = MeanFieldFlow::uniform(sp, s.n_minor(), false);
        MajorPolicy alpha = testsupport::random_policy(rng, s, sp);

        DpSolution dp = solve_dp(s, sp, mu, m, alpha);
        double dp_value = minor_reward(s, sp, dp.flow, mu, m);
        LinearSystem sys = assemble_constraints(s, sp, m, alpha);
        LpFlowSolution lp = solve_lp(sys, minor_objective(s, sp, mu, m, sys), sp);
        worst_dp_lp = std::max(worst_dp_lp, std::fabs(dp_value - lp.value));
        if (std::fabs(dp_value - lp.value) > 1e-9) ok4 = false;

        if (oracle::stopping_rule_count(s, sp) <= 100000) {
            ++oracle_checked;
            auto best = oracle::enumerate_stopping_rules(s, sp, mu, m, alpha);
            if (std::fabs(best.value - dp_value) > 1e-9 ||
                std::fabs(best.value - lp.value) > 1e-9)
                ok4 = false;
        }

        for (const OccupationFlow* flow : {&dp.flow, &lp.flow}) {
            auto [mass_err, balance_err] = occupation_invariants(sp, *flow);
            if (mass_err > 1e-10 || balance_err > 1e-10) ok5 = false;
        }
    }
    std::ostringstream d4;
    d4 << "50 instances, oracle on " << oracle_checked << ", worst |DP-LP| " << worst_dp_lp;
    report(4, "DP/LP/enumeration equivalence", ok4 && oracle_checked >= 10, d4.str());
    report(5, "occupation-flow invariants on all solver outputs", ok5);
}

// 6. softmax and entropy properties
void criterion_softmax() {
    util::Rng rng(77);
    bool ok = true;

    Scenario s = testsupport::random_scenario(rng, 2, 2, 3, false, true);
    PathSpace sp = build_path_space(s);
    MeanFieldFlow mu = MeanFieldFlow::uniform(sp, 2, true);
    MeanFieldFlow m = MeanFieldFlow::uniform(sp, 2, false);

    auto base = solve_regularized(s, sp, mu, m, 0.2);
    Scenario shifted = s;
    for (int t = 0; t < s.horizon; ++t)
        for (int s0 = 0; s0 < s.n_major(); ++s0)
            for (int a = 0; a < s.n_actions(); ++a)
                shifted.major_running.base[s.idx_major_running(t, s0, a)] += 3.25;
    auto moved = solve_regularized(shifted, sp, mu, m, 0.2);
    for (std::size_t t = 0; t < base.policy.weights.size(); ++t)
        for (std::size_t u = 0; u < base.policy.weights[t].size(); ++u)
            for (int a = 0; a < s.n_actions(); ++a)
                if (std::fabs(base.policy.weights[t][u][a] - moved.policy.weights[t][u][a]) > 1e-12)
                    ok = false;

    auto flat = solve_regularized(s, sp, mu, m, 1e6);
    for (const auto& slice : flat.policy.weights)
        for (const auto& w : slice)
            for (double v : w)
                if (std::fabs(v - 0.5) > 1e-5) ok = false;

    ActionSpace binary = ActionSpace::finite({"0", "1"});
    ActionSpace quad = ActionSpace::finite({"a", "b", "c", "d"});
    for (int i = 0; i < 10000; ++i) {
        if (entropy(rng.simplex(2), binary) > 2.0 / std::exp(1.0) + 1e-12) ok = false;
        if (entropy(rng.simplex(4), quad) > std::log(4.0) + 1e-12) ok = false;
    }
    report(6, "softmax shift invariance, flattening, entropy bounds", ok);
}

// 7. disintegration round trip on random feasible flows
void criterion_disintegration() {
    util::Rng rng(88);
    bool ok = true;
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        Scenario s = testsupport::random_scenario(rng, rng.uniform_int(1, 3),
                                                  rng.uniform_int(1, 2), rng.uniform_int(1, 3),
                                                  false, true);
        PathSpace sp = build_path_space(s);
        MajorPolicy alpha = testsupport::random_policy(rng, s, sp);
        MeanFieldFlow m = MeanFieldFlow::uniform(sp, s.n_minor(), false);
        OccupationFlow flow =
            flow_from_stop_profile(s, sp, m, alpha, testsupport::random_stop_profile(rng, sp));
        MajorMarginal p = marginal_law(s, sp, alpha, m);
        auto [mu_c, m_c] =
            disintegrate(sp, flow, p, MeanFieldFlow::uniform(sp, s.n_minor(), true),
                         MeanFieldFlow::uniform(sp, s.n_minor(), false));
        double resid = consistency_residual(sp, mu_c, m_c, flow, p);
        worst = std::max(worst, resid);
        if (resid > 1e-10) ok = false;
    }
    std::ostringstream d;
    d << "worst residual " << worst;
    report(7, "disintegration reconstruction on 50 random flows", ok, d.str());
}

// 8. convexity of the optimizer set on tie-engineered instances
void criterion_optimizer_convexity() {
    util::Rng rng(99);
    bool ok = true;
    for (int rep = 0; rep < 20; ++rep) {
        Scenario s = testsupport::random_scenario(rng, rng.uniform_int(1, 3),
                                                  rng.uniform_int(1, 2), rng.uniform_int(1, 3),
                                                  false);
        std::fill(s.minor_running.base.begin(), s.minor_running.base.end(), 0.0);
        std::fill(s.minor_stopping.base.begin(), s.minor_stopping.base.end(), 1.0);
        PathSpace sp = build_path_space(s);
        MeanFieldFlow mu = MeanFieldFlow::uniform(sp, s.n_minor(), true);
        MeanFieldFlow m = MeanFieldFlow::uniform(sp, s.n_minor(), false);
        MajorPolicy alpha = testsupport::random_policy(rng, s, sp);

        DpSolution f1 = solve_dp(s, sp, mu, m, alpha, 0.0);
        DpSolution f2 = solve_dp(s, sp, mu, m, alpha, 1.0);
        double v1 = minor_reward(s, sp, f1.flow, mu, m);
        for (double theta : {0.25, 0.5, 0.75}) {
            OccupationFlow mix = f1.flow;
            for (std::size_t t = 0; t < mix.mu_tilde.size(); ++t)
                for (std::size_t u = 0; u < mix.mu_tilde[t].size(); ++u)
                    for (std::size_t x = 0; x < mix.mu_tilde[t][u].size(); ++x)
                        mix.mu_tilde[t][u][x] = theta * f1.flow.mu_tilde[t][u][x] +
                                                (1 - theta) * f2.flow.mu_tilde[t][u][x];
            for (std::size_t t = 0; t < mix.m_tilde.size(); ++t)
                for (std::size_t u = 0; u < mix.m_tilde[t].size(); ++u)
                    for (std::size_t x = 0; x < mix.m_tilde[t][u].size(); ++x)
                        mix.m_tilde[t][u][x] = theta * f1.flow.m_tilde[t][u][x] +
                                               (1 - theta) * f2.flow.m_tilde[t][u][x];
            if (constraint_residual(s, sp, mix, m, alpha) > 1e-10) ok = false;
            if (std::fabs(minor_reward(s, sp, mix, mu, m) - v1) > 1e-10) ok = false;
        }
    }
    report(8, "convex combinations of LP optimizers stay optimal", ok);
}

// 9. uniform boundedness of the regularized values along the schedule
void criterion_value_bound() {
    bool ok = true;
    std::ostringstream d;
    for (const auto& name : {"paper-ex-2.1", "decoupled-toy", "bankrun-toy"}) {
        Scenario s = make_builtin(name);
        PathSpace sp = build_path_space(s);
        MeanFieldFlow mu = MeanFieldFlow::uniform(sp, s.n_minor(), true);
        MeanFieldFlow m = MeanFieldFlow::uniform(sp, s.n_minor(), false);
        double worst = 0.0;
        for (double lambda = 1.0; lambda >= 1e-4; lambda *= 0.5) {
            auto sol = solve_regularized(s, sp, mu, m, lambda);
            for (const auto& slice : sol.value.v)
                for (double v : slice) worst = std::max(worst, std::fabs(v));
        }
        double rmax = 0.0;
        for (const Vec* tab : {&s.major_running.base, &s.major_terminal.base,
                               &s.minor_running.base, &s.minor_stopping.base})
            for (double v : *tab) rmax = std::max(rmax, std::fabs(v));
        double bound = rmax * (s.horizon + 1) + 1.0;
        if (worst > bound) ok = false;
        d << name << ": " << worst << " <= " << bound << "; ";
    }
    report(9, "regularized values bounded along the schedule", ok, d.str());
}

// 10. the control variant
void criterion_control() {
    bool ok = true;
    std::ostringstream d;

    for (const char* name : {"control-toy", "control-toy-coupled"}) {
        ControlScenario cs = make_builtin_control(name);
        PathSpace sp = build_control_path_space(cs);
        ControlMeanField mu = ControlMeanField::uniform(cs, sp);
        ControlFieldFeatures feats = features_of(cs, sp, mu);
        MajorPolicy a0 =
            MajorPolicy::uniform(sp, cs.major_actions.size(), cs.major_actions.total_volume());
        StateActionFlow v = minor_control_best_response(cs, sp, a0, feats);
        double cres = control_c_residual(cs, sp, a0, feats, v);
        double bres = control_b_residual(cs, sp, a0, feats, v);
        if (cres > 1e-10 || bres > 1e-10) ok = false;
    }

    ControlScenario plain = make_builtin_control("control-toy");
    PathSpace sp_plain = build_control_path_space(plain);
    SolveConfig cfg;
    cfg.lambda = 0.05;
    cfg.damping = 1.0;
    ControlEquilibriumReport quick = solve_control_equilibrium(plain, sp_plain, cfg);
    if (!quick.converged || quick.iterations > 2) ok = false;
    d << "decoupled iters " << quick.iterations;

    ControlScenario coupled = make_builtin_control("control-toy-coupled");
    PathSpace sp_c = build_control_path_space(coupled);
    SolveConfig acfg;
    acfg.damping = 1.0;
    acfg.anneal = AnnealSchedule{1.0, 0.5, 1e-4};
    ControlEquilibriumReport rep = solve_control_equilibrium(coupled, sp_c, acfg);
    ControlCertificate cert = verify_control(rep, coupled, sp_c, 1e-6);
    auto search = oracle::control_grid_search(coupled, sp_c, 101);
    ControlFieldFeatures eq_feats = features_of(coupled, sp_c, rep.mu);
    bool agrees = std::fabs(eq_feats.run[0][0][0] - search.phi) <= 1e-9 &&
                  search.residual <= 1e-9 &&
                  std::fabs(rep.major_value - search.major_value) <= 1e-6;
    if (!rep.converged || !cert.pass() || !agrees) ok = false;
    d << ", coupled slacks " << cert.major.slack << "/" << cert.minor.slack << "/"
      << cert.consistency.slack << ", grid phi " << search.phi;

    report(10, "control variant: optimal-flow membership and certificates", ok, d.str());
}

// 11. CLI determinism
void criterion_cli_determinism() {
    fs::path d1 = fs::temp_directory_path() / "mmfg_acc_a";
    fs::path d2 = fs::temp_directory_path() / "mmfg_acc_b";
    fs::remove_all(d1);
    fs::remove_all(d2);
    std::string base = std::string(MMFG_CLI_PATH) +
                       " solve --scenario builtin:bankrun-toy --lambda 0.1 --seed 7 --out ";
    bool ok = std::system((base + d1.string() + " >/dev/null 2>&1").c_str()) == 0 &&
              std::system((base + d2.string() + " >/dev/null 2>&1").c_str()) == 0;
    if (ok) {
        for (const char* f :
             {"report.json", "policy.csv", "mu.csv", "m.csv", "marginal.csv", "occupation.csv"}) {
            if (read_text_file((d1 / f).string()) != read_text_file((d2 / f).string())) ok = false;
        }
    }
    report(11, "identical CLI invocations produce byte-identical outputs", ok);
}

}  // namespace

int main() {
    criterion_paper_example();
    criterion_nonconvexity();
    criterion_annealed();
    criterion_randomized_suite();
    criterion_softmax();
    criterion_disintegration();
    criterion_optimizer_convexity();
    criterion_value_bound();
    criterion_control();
    criterion_cli_determinism();
    if (failures == 0)
        std::cout << "all acceptance criteria passed\n";
    else
        std::cout << failures << " acceptance criteria FAILED\n";
    return failures;
}
