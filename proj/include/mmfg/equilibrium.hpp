#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "mmfg/major_solver.hpp"
#include "mmfg/minor_solver.hpp"

namespace mmfg {

struct AnnealSchedule {
    double start = 1.0;
    double factor = 0.5;
    double min = 1e-4;
};

struct SolveConfig {
    double lambda = 0.05;
    double damping = 0.5;   // theta in (0, 1]
    double tol = 1e-9;
    int max_iters = 500;
    double tie_q = 0.0;
    std::optional<AnnealSchedule> anneal;
    std::uint64_t seed = 0;
    bool random_init = false;
    double eps_final = 1e-6;    // unregularized certificate threshold
    double eps_support = 1e-3;  // allowed policy mass outside the argmax sets

    // progress hook; (lambda, iteration, delta, consistency)
    std::function<void(double, int, double, double)> on_iteration;

    void check() const;
};

struct Residuals {
    double major_gap = 0.0;
    double minor_gap = 0.0;
    double consistency = 0.0;
    double iteration_delta = 0.0;
    double support_outside = 0.0;
};

struct AnnealStage {
    double lambda = 0.0;
    int iterations = 0;
    bool converged = false;
    Residuals residuals;
};

struct EquilibriumReport {
    std::string scenario_name;
    std::string kind = "stopping";
    double lambda = 0.0;
    bool annealed = false;
    MeanFieldFlow mu, m;
    MajorPolicy alpha;
    OccupationFlow flow;
    MajorMarginal p;
    double major_value = 0.0;
    double minor_value = 0.0;
    Residuals residuals;
    std::vector<AnnealStage> lambda_trace;
    int iterations = 0;
    bool converged = false;
    double stalled_lambda = -1.0;  // lambda at which the anneal stalled, if any
};

struct StepResult {
    MeanFieldFlow mu, m;
    MajorPolicy alpha;
    MajorValue value;
    OccupationFlow flow;
    MajorMarginal p;
};

/// One application of the regularized map: Gibbs major response, minor DP
/// best response, path marginal, then disintegration with the input flows as
/// fallback on unreached nodes.
StepResult phi_lambda_step(const Scenario& s, const PathSpace& space, const MeanFieldFlow& mu,
                           const MeanFieldFlow& m, const SolveConfig& cfg);

/// Damped fixed-point iteration at fixed lambda. Non-convergence comes back
/// as converged=false on the report, never as an exception.
EquilibriumReport solve_regularized_equilibrium(const Scenario& s, const PathSpace& space,
                                                const SolveConfig& cfg);

/// Same, warm-started from the given flows.
EquilibriumReport solve_regularized_equilibrium_from(const Scenario& s, const PathSpace& space,
                                                     const SolveConfig& cfg,
                                                     const MeanFieldFlow& mu0,
                                                     const MeanFieldFlow& m0);

/// Anneals lambda down the schedule with warm starts, then certifies the
/// unregularized equilibrium conditions plus the argmax support check.
EquilibriumReport anneal_to_relaxed(const Scenario& s, const PathSpace& space,
                                    const SolveConfig& cfg);

struct ConditionCheck {
    bool ok = false;
    double slack = 0.0;
};

struct Certificate {
    ConditionCheck major, minor, consistency;
    double support_outside = 0.0;
    bool pass() const { return major.ok && minor.ok && consistency.ok; }
};

/// Recomputes the three equilibrium conditions from scratch: unregularized
/// major DP for the optimality gap, a fresh LP for the minor gap, and the
/// reconstruction residual for consistency. Independent of the iterator.
Certificate verify(const EquilibriumReport& report, const Scenario& s, const PathSpace& space,
                   double eps);

struct NonConvexityOutcome {
    bool reproduced = false;
    double policy_star_gap = 0.0;    // stop-at-0 profile vs its supporting policy
    double policy_dstar_gap = 0.0;   // stop-at-1 profile vs its supporting policy
    double min_midpoint_gap = 0.0;   // midpoint profile over the whole p grid
};

/// Reproduces the non-convex fixed-point set on the built-in two-branch
/// example: the two extreme best responses pass, their midpoint fails
/// against the entire optimal policy family.
NonConvexityOutcome nonconvexity_regression(const Scenario& s, const PathSpace& space);

}  // namespace mmfg
