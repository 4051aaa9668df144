#include <doctest.h>

#include <cmath>

#include "mmfg/builtins.hpp"
#include "mmfg/equilibrium.hpp"
#include "support/instances.hpp"

using namespace mmfg;

namespace {

SolveConfig paper_config() {
    SolveConfig cfg;
    cfg.lambda = 0.05;
    cfg.damping = 0.5;
    cfg.tol = 1e-9;
    return cfg;
}

}  // namespace

TEST_CASE("the decoupled map ignores its input") {
    Scenario s = make_builtin("decoupled-toy");
    PathSpace sp = build_path_space(s);
    SolveConfig cfg = paper_config();
    util::Rng rng(51);
    MeanFieldFlow mu1 = testsupport::random_flow(rng, sp, 2, true);
    MeanFieldFlow m1 = testsupport::random_flow(rng, sp, 2, false);
    MeanFieldFlow mu2 = testsupport::random_flow(rng, sp, 2, true);
    MeanFieldFlow m2 = testsupport::random_flow(rng, sp, 2, false);
    StepResult a = phi_lambda_step(s, sp, mu1, m1, cfg);
    StepResult b = phi_lambda_step(s, sp, mu2, m2, cfg);
    CHECK(flow_distance(a.mu, b.mu) <= 1e-14);
    CHECK(flow_distance(a.m, b.m) <= 1e-14);
}

TEST_CASE("the map is a pure function") {
    Scenario s = make_builtin("bankrun-toy");
    PathSpace sp = build_path_space(s);
    SolveConfig cfg = paper_config();
    MeanFieldFlow mu = MeanFieldFlow::uniform(sp, 2, true);
    MeanFieldFlow m = MeanFieldFlow::uniform(sp, 2, false);
    StepResult a = phi_lambda_step(s, sp, mu, m, cfg);
    StepResult b = phi_lambda_step(s, sp, mu, m, cfg);
    CHECK(flow_distance(a.mu, b.mu) == 0.0);
    CHECK(flow_distance(a.m, b.m) == 0.0);
}

TEST_CASE("one step matches a scripted composition of the four solvers") {
    Scenario s = make_builtin("paper-ex-2.1");
    PathSpace sp = build_path_space(s);
    SolveConfig cfg;
    cfg.lambda = 0.1;
    MeanFieldFlow mu = MeanFieldFlow::uniform(sp, 1, true);
    MeanFieldFlow m = MeanFieldFlow::uniform(sp, 1, false);

    StepResult step = phi_lambda_step(s, sp, mu, m, cfg);

    RegularizedSolution major = solve_regularized(s, sp, mu, m, cfg.lambda);
    DpSolution best = solve_dp(s, sp, mu, m, major.policy, cfg.tie_q);
    MajorMarginal p = marginal_law(s, sp, major.policy, m);
    auto [mu2, m2] = disintegrate(sp, best.flow, p, mu, m);

    CHECK(flow_distance(step.mu, mu2) == 0.0);
    CHECK(flow_distance(step.m, m2) == 0.0);
    for (int t = 0; t < sp.horizon; ++t)
        for (std::size_t u = 0; u < sp.slice_size(t); ++u)
            for (int a = 0; a < 2; ++a)
                CHECK(step.alpha.weights[t][u][a] == major.policy.weights[t][u][a]);
}

TEST_CASE("a converged point is a fixed point of the map") {
    Scenario s = make_builtin("paper-ex-2.1");
    PathSpace sp = build_path_space(s);
    SolveConfig cfg = paper_config();
    cfg.tol = 1e-12;
    EquilibriumReport rep = solve_regularized_equilibrium(s, sp, cfg);
    REQUIRE(rep.converged);
    StepResult again = phi_lambda_step(s, sp, rep.mu, rep.m, cfg);
    CHECK(flow_distance(again.mu, rep.mu) <= 1e-10);
    CHECK(flow_distance(again.m, rep.m) <= 1e-10);
}

TEST_CASE("decoupled scenarios converge immediately without damping") {
    Scenario s = make_builtin("decoupled-toy");
    PathSpace sp = build_path_space(s);
    SolveConfig cfg = paper_config();
    cfg.damping = 1.0;
    EquilibriumReport rep = solve_regularized_equilibrium(s, sp, cfg);
    CHECK(rep.converged);
    CHECK(rep.iterations <= 2);
}

TEST_CASE("worked example at lambda 0.05: certificates and exit mass") {
    Scenario s = make_builtin("paper-ex-2.1");
    PathSpace sp = build_path_space(s);
    EquilibriumReport rep = solve_regularized_equilibrium(s, sp, paper_config());
    REQUIRE(rep.converged);
    CHECK(rep.residuals.major_gap <= 1e-8);
    CHECK(rep.residuals.minor_gap <= 1e-8);
    CHECK(rep.residuals.consistency <= 1e-8);
    CHECK(rep.alpha.weights[0][0][1] < 0.02);  // exiting at once stays rare
}

TEST_CASE("different random initializations land on the same equilibrium") {
    Scenario s = make_builtin("paper-ex-2.1");
    PathSpace sp = build_path_space(s);
    SolveConfig cfg = paper_config();
    cfg.random_init = true;
    cfg.seed = 1;
    EquilibriumReport a = solve_regularized_equilibrium(s, sp, cfg);
    cfg.seed = 2;
    EquilibriumReport b = solve_regularized_equilibrium(s, sp, cfg);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    CHECK(std::fabs(a.residuals.major_gap - b.residuals.major_gap) <= 1e-9);
    CHECK(std::fabs(a.residuals.minor_gap - b.residuals.minor_gap) <= 1e-9);
    CHECK(flow_distance(a.mu, b.mu) <= 1e-6);
    CHECK(flow_distance(a.m, b.m) <= 1e-6);
}

TEST_CASE("damped iterates never leave the subprobability set") {
    Scenario s = make_builtin("bankrun-toy");
    PathSpace sp = build_path_space(s);
    SolveConfig cfg = paper_config();
    cfg.random_init = true;
    cfg.max_iters = 40;
    EquilibriumReport rep = solve_regularized_equilibrium(s, sp, cfg);
    for (const auto& slice : rep.mu.cells)
        for (const auto& cell : slice) {
            for (double v : cell) CHECK(v >= 0.0);
            CHECK(util::sum(cell) <= 1.0 + 1e-12);
        }
    for (const auto& slice : rep.m.cells)
        for (const auto& cell : slice) {
            for (double v : cell) CHECK(v >= 0.0);
            CHECK(util::sum(cell) <= 1.0 + 1e-12);
        }
}

TEST_CASE("annealing the worked example reaches the relaxed equilibrium") {
    Scenario s = make_builtin("paper-ex-2.1");
    PathSpace sp = build_path_space(s);
    SolveConfig cfg;
    cfg.anneal = AnnealSchedule{1.0, 0.5, 1e-4};
    EquilibriumReport rep = anneal_to_relaxed(s, sp, cfg);
    REQUIRE(rep.converged);
    CHECK(rep.alpha.weights[0][0][1] <= 1e-3);   // instant exit stays unplayed
    CHECK(rep.major_value >= 1.0 - 1e-3);
    CHECK(rep.residuals.support_outside <= 1e-3);
    CHECK(rep.lambda == doctest::Approx(1e-4));

    Certificate cert = verify(rep, s, sp, 1e-3);
    CHECK(cert.pass());

    // the certificate recomputation agrees with the iterator's residuals
    CHECK(std::fabs(cert.major.slack - rep.residuals.major_gap) <= 1e-9);
    CHECK(std::fabs(cert.minor.slack - rep.residuals.minor_gap) <= 1e-9);
    CHECK(std::fabs(cert.consistency.slack - rep.residuals.consistency) <= 1e-9);

    // values stay bounded along the schedule
    double rmax = 1.0;
    for (const auto& stage : rep.lambda_trace) {
        CHECK(stage.converged);
        CHECK(stage.lambda <= 1.0);
    }
    double worst = 0.0;
    for (double lam = 1.0; lam >= 1e-4; lam *= 0.5) {
        auto sol = solve_regularized(s, sp, rep.mu, rep.m, lam);
        for (const auto& slice : sol.value.v)
            for (double v : slice) worst = std::max(worst, std::fabs(v));
    }
    CHECK(worst <= rmax * (s.horizon + 1) + 1.0);
}

TEST_CASE("annealing a decoupled scenario equals the direct unregularized solve") {
    Scenario s = make_builtin("decoupled-toy");
    PathSpace sp = build_path_space(s);
    SolveConfig cfg;
    cfg.damping = 1.0;
    cfg.anneal = AnnealSchedule{1.0, 0.5, 1e-4};
    EquilibriumReport rep = anneal_to_relaxed(s, sp, cfg);
    REQUIRE(rep.converged);

    auto [value, sets] = solve_unregularized(s, sp, rep.mu, rep.m);
    double v0 = 0.0;
    for (std::size_t u = 0; u < sp.slice_size(0); ++u)
        v0 += s.initial_major[sp.node(0, u).history[0]] * value.v[0][u];
    CHECK(rep.major_value == doctest::Approx(v0).epsilon(1e-9));
    CHECK(mass_outside_argmax(rep.alpha, sets, s.actions) <= 1e-6);

    DpSolution direct = solve_dp(s, sp, rep.mu, rep.m, rep.alpha, cfg.tie_q);
    CHECK(minor_reward(s, sp, direct.flow, rep.mu, rep.m) ==
          doctest::Approx(rep.minor_value).epsilon(1e-9));
}

TEST_CASE("warm starts do not lose to cold starts by much") {
    Scenario s = make_builtin("bankrun-toy");
    PathSpace sp = build_path_space(s);
    SolveConfig cfg;
    cfg.anneal = AnnealSchedule{1.0, 0.5, 1e-2};
    EquilibriumReport warm = anneal_to_relaxed(s, sp, cfg);
    // stage convergence is what matters here; at lambda = 1e-2 the
    // unregularized certificate itself is legitimately still loose
    REQUIRE(warm.stalled_lambda < 0.0);
    for (const auto& stage : warm.lambda_trace) REQUIRE(stage.converged);

    int cold_total = 0;
    for (const auto& stage : warm.lambda_trace) {
        SolveConfig c;
        c.lambda = stage.lambda;
        EquilibriumReport cold = solve_regularized_equilibrium(s, sp, c);
        cold_total += cold.iterations;
    }
    // tracked as a regression, not a theorem
    CHECK(warm.iterations <= 2 * cold_total + 5);
    MESSAGE("warm total ", warm.iterations, " vs cold total ", cold_total);
}

TEST_CASE("verify flags a tampered policy with the full optimality gap") {
    Scenario s = make_builtin("paper-ex-2.1");
    PathSpace sp = build_path_space(s);
    SolveConfig cfg;
    cfg.anneal = AnnealSchedule{1.0, 0.5, 1e-4};
    EquilibriumReport rep = anneal_to_relaxed(s, sp, cfg);
    REQUIRE(rep.converged);

    EquilibriumReport bad = rep;
    bad.alpha = stop_policy_at(s, sp, 0);  // worth 0 against the optimal 1
    Certificate cert = verify(bad, s, sp, 1e-6);
    CHECK(!cert.major.ok);
    CHECK(cert.major.slack == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("verify flags a perturbed flow through the consistency condition") {
    Scenario s = make_builtin("paper-ex-2.1");
    PathSpace sp = build_path_space(s);
    SolveConfig cfg;
    cfg.anneal = AnnealSchedule{1.0, 0.5, 1e-4};
    EquilibriumReport rep = anneal_to_relaxed(s, sp, cfg);
    REQUIRE(rep.converged);

    EquilibriumReport bent = rep;
    bent.mu.at(0, 0)[0] += 0.25;  // root is fully supported, p = 1
    Certificate cert = verify(bent, s, sp, 1e-6);
    CHECK(!cert.consistency.ok);
    CHECK(cert.consistency.slack == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("the non-convexity of the fixed-point set is reproduced") {
    Scenario s = make_builtin("paper-ex-2.1");
    PathSpace sp = build_path_space(s);
    NonConvexityOutcome out = nonconvexity_regression(s, sp);
    CHECK(out.reproduced);
    CHECK(out.policy_star_gap <= 1e-9);
    CHECK(out.policy_dstar_gap <= 1e-9);
    CHECK(out.min_midpoint_gap > 0.05);
}

TEST_CASE("shifting the running reward leaves the annealed policy alone") {
    Scenario s = make_builtin("paper-ex-2.1");
    PathSpace sp = build_path_space(s);
    SolveConfig cfg;
    cfg.anneal = AnnealSchedule{1.0, 0.5, 1e-4};
    EquilibriumReport base = anneal_to_relaxed(s, sp, cfg);

    Scenario shifted = s;
    for (int t = 0; t < s.horizon; ++t)
        for (int s0 = 0; s0 < s.n_major(); ++s0)
            for (int a = 0; a < s.n_actions(); ++a)
                shifted.major_running.base[s.idx_major_running(t, s0, a)] += 0.4;
    EquilibriumReport moved = anneal_to_relaxed(shifted, sp, cfg);

    CHECK(base.converged == moved.converged);
    for (int t = 0; t < sp.horizon; ++t)
        for (std::size_t u = 0; u < sp.slice_size(t); ++u)
            for (int a = 0; a < s.n_actions(); ++a)
                CHECK(moved.alpha.weights[t][u][a] ==
                      doctest::Approx(base.alpha.weights[t][u][a]).epsilon(1e-9));
    CHECK(moved.major_value == doctest::Approx(base.major_value + 0.8).epsilon(1e-9));
}

TEST_CASE("non-convergence is reported, not thrown") {
    Scenario s = make_builtin("bankrun-toy");
    PathSpace sp = build_path_space(s);
    SolveConfig cfg;
    cfg.lambda = 0.1;
    cfg.max_iters = 2;  // far too few
    EquilibriumReport rep = solve_regularized_equilibrium(s, sp, cfg);
    CHECK(!rep.converged);
    CHECK(rep.iterations == 2);
}

TEST_CASE("solver configuration is validated") {
    SolveConfig cfg;
    cfg.damping = 0.0;
    CHECK_THROWS_AS(cfg.check(), ValidationError);
    cfg = SolveConfig{};
    cfg.anneal = AnnealSchedule{1.0, 1.5, 1e-4};
    CHECK_THROWS_AS(cfg.check(), ValidationError);
    cfg = SolveConfig{};
    cfg.tie_q = 1.5;
    CHECK_THROWS_AS(cfg.check(), ValidationError);
}
