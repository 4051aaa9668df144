#include "mmfg/equilibrium.hpp"

#include <cmath>

namespace mmfg {

void SolveConfig::check() const {
    if (lambda < 0.0 || !std::isfinite(lambda)) throw ValidationError("lambda must be nonnegative");
    if (damping <= 0.0 || damping > 1.0) throw ValidationError("damping must lie in (0, 1]");
    if (tol <= 0.0) throw ValidationError("tol must be positive");
    if (max_iters < 1) throw ValidationError("max_iters must be >= 1");
    if (tie_q < 0.0 || tie_q > 1.0) throw ValidationError("tie parameter must lie in [0, 1]");
    if (anneal) {
        if (anneal->start <= 0.0 || anneal->min <= 0.0 || anneal->min > anneal->start)
            throw ValidationError("anneal schedule requires 0 < lambda_min <= lambda_start");
        if (anneal->factor <= 0.0 || anneal->factor >= 1.0)
            throw ValidationError("anneal factor must lie in (0, 1)");
    }
    if (eps_final <= 0.0 || eps_support <= 0.0) throw ValidationError("eps thresholds must be positive");
}

namespace {

MeanFieldFlow random_flow(const PathSpace& space, int n_minor, bool with_terminal,
                          util::Rng& rng) {
    MeanFieldFlow f = MeanFieldFlow::zeros(space, n_minor, with_terminal);
    for (auto& slice : f.cells)
        for (auto& cell : slice) cell = rng.simplex(n_minor);
    return f;
}

void damp_into(MeanFieldFlow& cur, const MeanFieldFlow& next, double theta) {
    for (std::size_t t = 0; t < cur.cells.size(); ++t)
        for (std::size_t u = 0; u < cur.cells[t].size(); ++u)
            for (std::size_t x = 0; x < cur.cells[t][u].size(); ++x)
                cur.cells[t][u][x] = (1.0 - theta) * cur.cells[t][u][x] + theta * next.cells[t][u][x];
}

double initial_average(const Scenario& s, const PathSpace& space, const Vec& v0) {
    double total = 0.0;
    for (std::size_t u = 0; u < space.slice_size(0); ++u)
        total += s.initial_major[space.node(0, u).history[0]] * v0[u];
    return total;
}

}  // namespace

StepResult phi_lambda_step(const Scenario& s, const PathSpace& space, const MeanFieldFlow& mu,
                           const MeanFieldFlow& m, const SolveConfig& cfg) {
    if (cfg.lambda <= 0.0) throw ValidationError("phi_lambda_step requires lambda > 0");
    StepResult r;
    RegularizedSolution major = solve_regularized(s, space, mu, m, cfg.lambda);
    r.alpha = std::move(major.policy);
    r.value = std::move(major.value);
    DpSolution best = solve_dp(s, space, mu, m, r.alpha, cfg.tie_q);
    r.flow = std::move(best.flow);
    r.p = marginal_law(s, space, r.alpha, m);
    auto [mu2, m2] = disintegrate(space, r.flow, r.p, mu, m);
    r.mu = std::move(mu2);
    r.m = std::move(m2);
    return r;
}

EquilibriumReport solve_regularized_equilibrium_from(const Scenario& s, const PathSpace& space,
                                                     const SolveConfig& cfg,
                                                     const MeanFieldFlow& mu0,
                                                     const MeanFieldFlow& m0) {
    cfg.check();
    if (cfg.lambda <= 0.0)
        throw ValidationError("regularized solve requires lambda > 0; anneal to reach lambda = 0");

    EquilibriumReport rep;
    rep.scenario_name = s.name;
    rep.lambda = cfg.lambda;
    rep.mu = mu0;
    rep.m = m0;

    double delta = 0.0, cons = 0.0;
    bool settled = false;
    int iter = 0;
    while (iter < cfg.max_iters) {
        ++iter;
        StepResult step = phi_lambda_step(s, space, rep.mu, rep.m, cfg);
        MeanFieldFlow prev_mu = rep.mu, prev_m = rep.m;
        damp_into(rep.mu, step.mu, cfg.damping);
        damp_into(rep.m, step.m, cfg.damping);
        delta = std::max(flow_distance(prev_mu, rep.mu), flow_distance(prev_m, rep.m));
        cons = consistency_residual(space, rep.mu, rep.m, step.flow, step.p);
        if (cfg.on_iteration) cfg.on_iteration(cfg.lambda, iter, delta, cons);
        if (delta <= cfg.tol && cons <= cfg.tol) {
            settled = true;
            break;
        }
    }
    rep.iterations = iter;

    // rebuild the response tuple against the final flows so the report is
    // internally coherent even when the iteration stalled
    RegularizedSolution major = solve_regularized(s, space, rep.mu, rep.m, cfg.lambda);
    rep.alpha = std::move(major.policy);
    rep.flow = solve_dp(s, space, rep.mu, rep.m, rep.alpha, cfg.tie_q).flow;
    rep.p = marginal_law(s, space, rep.alpha, rep.m);

    // certificate at this lambda: the DP/rollout identity for the major, a
    // fresh LP for the minor, the reconstruction residual for consistency
    rep.major_value = major_reward(s, space, rep.alpha, rep.mu, rep.m, cfg.lambda);
    double v0 = initial_average(s, space, major.value.v[0]);
    rep.residuals.major_gap = std::fabs(v0 - rep.major_value);
    rep.minor_value = minor_reward(s, space, rep.flow, rep.mu, rep.m);
    rep.residuals.minor_gap = best_response_gap(s, space, rep.flow, rep.mu, rep.m, rep.alpha);
    rep.residuals.consistency = consistency_residual(space, rep.mu, rep.m, rep.flow, rep.p);
    rep.residuals.iteration_delta = delta;
    rep.converged = settled && rep.residuals.major_gap <= cfg.tol &&
                    rep.residuals.minor_gap <= cfg.tol && rep.residuals.consistency <= cfg.tol;
    return rep;
}

EquilibriumReport solve_regularized_equilibrium(const Scenario& s, const PathSpace& space,
                                                const SolveConfig& cfg) {
    cfg.check();
    MeanFieldFlow mu0, m0;
    if (cfg.random_init) {
        util::Rng rng(cfg.seed);
        mu0 = random_flow(space, s.n_minor(), true, rng);
        m0 = random_flow(space, s.n_minor(), false, rng);
    } else {
        mu0 = MeanFieldFlow::uniform(space, s.n_minor(), true);
        m0 = MeanFieldFlow::uniform(space, s.n_minor(), false);
    }
    return solve_regularized_equilibrium_from(s, space, cfg, mu0, m0);
}

EquilibriumReport anneal_to_relaxed(const Scenario& s, const PathSpace& space,
                                    const SolveConfig& cfg) {
    cfg.check();
    if (!cfg.anneal) throw ValidationError("anneal_to_relaxed requires an anneal schedule");
    const AnnealSchedule sched = *cfg.anneal;

    MeanFieldFlow mu = MeanFieldFlow::uniform(space, s.n_minor(), true);
    MeanFieldFlow m = MeanFieldFlow::uniform(space, s.n_minor(), false);
    if (cfg.random_init) {
        util::Rng rng(cfg.seed);
        mu = random_flow(space, s.n_minor(), true, rng);
        m = random_flow(space, s.n_minor(), false, rng);
    }

    EquilibriumReport rep;
    rep.scenario_name = s.name;
    rep.annealed = true;
    bool all_converged = true;

    double lam = sched.start;
    EquilibriumReport stage;
    while (true) {
        SolveConfig scfg = cfg;
        scfg.lambda = lam;
        scfg.anneal.reset();
        stage = solve_regularized_equilibrium_from(s, space, scfg, mu, m);
        rep.lambda_trace.push_back({lam, stage.iterations, stage.converged, stage.residuals});
        rep.iterations += stage.iterations;
        mu = stage.mu;
        m = stage.m;
        if (!stage.converged) {
            all_converged = false;
            rep.stalled_lambda = lam;
            break;
        }
        if (lam <= sched.min * (1.0 + 1e-12)) break;
        lam *= sched.factor;
        if (lam < sched.min) lam = sched.min;
    }

    rep.lambda = rep.lambda_trace.back().lambda;
    rep.mu = std::move(stage.mu);
    rep.m = std::move(stage.m);
    rep.alpha = std::move(stage.alpha);
    rep.flow = std::move(stage.flow);
    rep.p = std::move(stage.p);

    // unregularized certificate at the annealed point
    auto [value, sets] = solve_unregularized(s, space, rep.mu, rep.m);
    rep.major_value = major_reward(s, space, rep.alpha, rep.mu, rep.m, 0.0);
    rep.minor_value = minor_reward(s, space, rep.flow, rep.mu, rep.m);
    rep.residuals.major_gap = initial_average(s, space, value.v[0]) - rep.major_value;
    rep.residuals.minor_gap = best_response_gap(s, space, rep.flow, rep.mu, rep.m, rep.alpha);
    rep.residuals.consistency = consistency_residual(space, rep.mu, rep.m, rep.flow, rep.p);
    rep.residuals.iteration_delta = rep.lambda_trace.back().residuals.iteration_delta;
    rep.residuals.support_outside = mass_outside_argmax(rep.alpha, sets, s.actions);
    rep.converged = all_converged && rep.residuals.major_gap <= cfg.eps_final &&
                    rep.residuals.minor_gap <= cfg.eps_final &&
                    rep.residuals.consistency <= cfg.eps_final &&
                    rep.residuals.support_outside <= cfg.eps_support;
    return rep;
}

Certificate verify(const EquilibriumReport& report, const Scenario& s, const PathSpace& space,
                   double eps) {
    check_flow_shape(report.mu, space, s.n_minor(), true);
    check_flow_shape(report.m, space, s.n_minor(), false);
    check_policy_shape(report.alpha, space, s.actions.size());
    check_occupation_shape(report.flow, space, s.n_minor());

    Certificate cert;
    MajorMarginal p = marginal_law(s, space, report.alpha, report.m);

    auto [value, sets] = solve_unregularized(s, space, report.mu, report.m);
    double best = initial_average(s, space, value.v[0]);
    double attained = major_reward(s, space, report.alpha, report.mu, report.m, 0.0);
    cert.major.slack = best - attained;
    cert.major.ok = cert.major.slack <= eps;
    cert.support_outside = mass_outside_argmax(report.alpha, sets, s.actions);

    try {
        cert.minor.slack = best_response_gap(s, space, report.flow, report.mu, report.m, report.alpha);
        cert.minor.ok = cert.minor.slack <= eps;
    } catch (const InfeasibleFlow&) {
        cert.minor.slack = constraint_residual(s, space, report.flow, report.m, report.alpha);
        cert.minor.ok = false;
    }

    cert.consistency.slack = consistency_residual(space, report.mu, report.m, report.flow, p);
    cert.consistency.ok = cert.consistency.slack <= eps;
    return cert;
}

NonConvexityOutcome nonconvexity_regression(const Scenario& s, const PathSpace& space) {
    if (!s.stopping_mode || s.horizon != 2 || s.n_major() != 2 || space.slice_size(0) != 1)
        throw ShapeMismatch("nonconvexity_regression expects the built-in two-branch example");

    // the optimal family: stop now with probability p at the root, stop at
    // t=1 otherwise; the never-stop branch carries probability zero
    auto family = [&](double prob) {
        MajorPolicy a = MajorPolicy::uniform(space, s.actions.size(), s.actions.total_volume());
        for (int t = 0; t < space.horizon; ++t)
            for (std::size_t u = 0; u < space.slice_size(t); ++u) {
                bool absorbed = space.node(t, u).history.back() == s.absorbing_state;
                double ps = absorbed ? 0.0 : (t == 0 ? prob : 1.0);
                a.weights[t][u] = Vec{1.0 - ps, ps};
            }
        return a;
    };

    MeanFieldFlow m_unif = MeanFieldFlow::uniform(space, s.n_minor(), false);
    MeanFieldFlow mu_unif = MeanFieldFlow::uniform(space, s.n_minor(), true);

    auto profile = [&](double at0, double at1) {
        std::vector<Vec> sigma(space.horizon);
        for (int t = 0; t < space.horizon; ++t)
            sigma[t].assign(space.slice_size(t), t == 0 ? at0 : at1);
        return sigma;
    };

    auto gap_of = [&](const std::vector<Vec>& sigma, const MajorPolicy& alpha) {
        OccupationFlow flow = flow_from_stop_profile(s, space, m_unif, alpha, sigma);
        MajorMarginal p = marginal_law(s, space, alpha, m_unif);
        auto [mu_c, m_c] = disintegrate(space, flow, p, mu_unif, m_unif);
        return best_response_gap(s, space, flow, mu_c, m_c, alpha);
    };

    NonConvexityOutcome out;
    out.policy_star_gap = gap_of(profile(1.0, 0.0), family(0.0));
    out.policy_dstar_gap = gap_of(profile(0.0, 1.0), family(1.0));
    out.min_midpoint_gap = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 10; ++k) {
        double gap = gap_of(profile(0.5, 1.0), family(k / 10.0));
        out.min_midpoint_gap = std::min(out.min_midpoint_gap, gap);
    }
    out.reproduced = out.policy_star_gap <= 1e-9 && out.policy_dstar_gap <= 1e-9 &&
                     out.min_midpoint_gap > 0.05;
    return out;
}

}  // namespace mmfg
