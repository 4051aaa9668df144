#pragma once

#include "mmfg/equilibrium.hpp"
#include "mmfg/major_solver.hpp"
#include "mmfg/scenario.hpp"
#include "mmfg/types.hpp"

namespace mmfg {

/// Problem data for the variant where minor players choose controls. The
/// mean-field term is a per-(t, node) distribution over (minor state x minor
/// action) before the horizon and over the minor grid at the horizon, so two
/// feature declarations exist: one per flavor.
struct ControlScenario {
    std::string name;
    int horizon = 1;
    std::vector<std::string> major_states;
    Vec minor_grid;
    ActionSpace major_actions;
    ActionSpace minor_actions;
    FeatureSpec features_sa;    // reduces state-action cells, drives kernels and running rewards
    FeatureSpec features_term;  // reduces the terminal state distribution

    AffineTable major_kernel;    // [t][s0][a0][s0']
    AffineTable minor_kernel;    // [t][x][s0][a1][x']
    AffineTable major_running;   // [t][s0][a0]
    AffineTable major_terminal;  // [s0]
    AffineTable minor_running;   // [t][x][s0][a1]
    AffineTable minor_terminal;  // [x][s0]

    Vec initial_major, initial_minor;

    int n_major() const { return static_cast<int>(major_states.size()); }
    int n_minor() const { return static_cast<int>(minor_grid.size()); }
    int n_minor_actions() const { return static_cast<int>(minor_actions.size()); }
    int sa_cells() const { return n_minor() * n_minor_actions(); }

    std::size_t idx_major_kernel(int t, int s0, int a, int s0n) const;
    std::size_t idx_minor_kernel(int t, int x, int s0, int a, int xn) const;
    std::size_t idx_major_running(int t, int s0, int a) const;
    std::size_t idx_minor_running(int t, int x, int s0, int a) const;
    std::size_t idx_terminal(int x, int s0) const;
};

void validate(const ControlScenario& cs);

PathSpace build_control_path_space(const ControlScenario& cs,
                                   std::size_t node_budget = kDefaultNodeBudget);

/// Conditional mean field: per (t, node) a distribution over state-action
/// cells (t < T, index x * |A1| + a) or over the minor grid (t = T).
struct ControlMeanField {
    std::vector<std::vector<Vec>> cells;  // [t][node]

    static ControlMeanField uniform(const ControlScenario& cs, const PathSpace& space);
};

/// Joint state-action flow; same cell layout, but entries are joint masses
/// whose per-node totals give the path marginal v_t|_W.
struct StateActionFlow {
    std::vector<std::vector<Vec>> v;  // [t][node]

    Vec node_marginal(int t) const;
};

/// Feature rows per (t, node); shares the major DP's layout so solvers and
/// oracles use one code path.
using ControlFieldFeatures = MajorFieldFeatures;

ControlFieldFeatures features_of(const ControlScenario& cs, const PathSpace& space,
                                 const ControlMeanField& mu);
ControlFieldFeatures constant_features(const ControlScenario& cs, const PathSpace& space,
                                       const Vec& run_phi, const Vec& term_phi);

MajorProblem major_problem_of(const ControlScenario& cs);

/// One Bellman backup (T_t v)(x, u) = max_a { f1 + E[v(next)] }.
std::vector<Vec> bellman_backup(const ControlScenario& cs, const PathSpace& space,
                                const MajorPolicy& alpha0, const ControlFieldFeatures& feats,
                                int t, const std::vector<Vec>& v_next);

/// Full backward pass.
MinorValue control_minor_values(const ControlScenario& cs, const PathSpace& space,
                                const MajorPolicy& alpha0, const ControlFieldFeatures& feats);

/// Transports one state-action slice forward and extends it with the given
/// next-step action policy (policy[node][x] is a distribution over A1).
std::vector<Vec> consistent_flow_step(const ControlScenario& cs, const PathSpace& space,
                                      const MajorPolicy& alpha0, const ControlFieldFeatures& feats,
                                      int t, const std::vector<Vec>& v_t,
                                      const std::vector<std::vector<Vec>>& policy_next);

/// Backward value pass plus a forward flow pass placing action mass on the
/// argmax set (ties split by tie_q for two-way ties, uniformly otherwise).
StateActionFlow minor_control_best_response(const ControlScenario& cs, const PathSpace& space,
                                            const MajorPolicy& alpha0,
                                            const ControlFieldFeatures& feats, double tie_q = 0.0,
                                            double eta = -1.0);

/// Dynamic-consistency residual (forward identity) of a candidate flow.
double control_c_residual(const ControlScenario& cs, const PathSpace& space,
                          const MajorPolicy& alpha0, const ControlFieldFeatures& feats,
                          const StateActionFlow& v);
/// Mass the flow places on actions whose Bellman slack exceeds eta.
double control_b_residual(const ControlScenario& cs, const PathSpace& space,
                          const MajorPolicy& alpha0, const ControlFieldFeatures& feats,
                          const StateActionFlow& v, double eta = -1.0);

/// Disintegrates a flow against its own path marginal; unsupported nodes
/// copy the fallback.
ControlMeanField disintegrate_control(const PathSpace& space, const StateActionFlow& v,
                                      const ControlMeanField& fallback, double eps = kSupportEps);
double control_consistency_residual(const PathSpace& space, const ControlMeanField& mu,
                                    const StateActionFlow& v, double eps = kSupportEps);

double control_major_reward(const ControlScenario& cs, const PathSpace& space,
                            const MajorPolicy& alpha0, const ControlFieldFeatures& feats,
                            double lambda);
double control_minor_reward(const ControlScenario& cs, const PathSpace& space,
                            const ControlFieldFeatures& feats, const StateActionFlow& v);

struct ControlEquilibriumReport {
    std::string scenario_name;
    std::string kind = "control";
    double lambda = 0.0;
    bool annealed = false;
    ControlMeanField mu;
    MajorPolicy alpha0;
    StateActionFlow v;
    double major_value = 0.0;
    double minor_value = 0.0;
    Residuals residuals;  // minor_gap holds the Bellman-slack mass
    std::vector<AnnealStage> lambda_trace;
    int iterations = 0;
    bool converged = false;
    double stalled_lambda = -1.0;
};

ControlEquilibriumReport solve_control_equilibrium(const ControlScenario& cs,
                                                   const PathSpace& space, const SolveConfig& cfg);

struct ControlCertificate {
    ConditionCheck major, minor, consistency;
    bool pass() const { return major.ok && minor.ok && consistency.ok; }
};

ControlCertificate verify_control(const ControlEquilibriumReport& report,
                                  const ControlScenario& cs, const PathSpace& space, double eps);

}  // namespace mmfg
