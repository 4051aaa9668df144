#pragma once

#include <string>
#include <utility>

#include "mmfg/mean_field.hpp"
#include "mmfg/scenario.hpp"
#include "mmfg/simplex.hpp"
#include "mmfg/types.hpp"

namespace mmfg {

/// Equality constraints of the admissible occupation-measure set in forward
/// Kolmogorov form, with the variable layout used by the LP solver:
/// stopped-mass variables first (one per row, giving an identity start
/// basis), active-mass variables after.
struct LinearSystem {
    LinearProgram lp;            // objective c left zero here
    std::vector<int> basis;      // identity start basis (the stopped columns)
    int horizon = 0;
    int n_minor = 0;
    std::vector<std::size_t> slice_sizes;
    std::size_t mu_var(int t, int node, int x) const;
    std::size_t m_var(int t, int node, int x) const;
    std::size_t row_of(int t, int node, int x) const { return mu_var(t, node, x); }
};

LinearSystem assemble_constraints(const Scenario& s, const PathSpace& space,
                                  const MeanFieldFlow& m, const MajorPolicy& alpha);

/// Objective coefficients of J1 for the same variable layout.
Vec minor_objective(const Scenario& s, const PathSpace& space, const MeanFieldFlow& mu,
                    const MeanFieldFlow& m, const LinearSystem& sys);

struct LpFlowSolution {
    OccupationFlow flow;
    double value = 0.0;
    int iterations = 0;
};

/// LP best response: maximizes J1 over the admissible set.
LpFlowSolution solve_lp(const LinearSystem& sys, const Vec& objective, const PathSpace& space);

struct DpSolution {
    MinorValue value;
    OccupationFlow flow;
};

/// Backward-induction optimal stopping plus a forward mass split: stop where
/// the stopping reward beats continuation, keep going where it loses, split
/// by `tie_q` inside the tie band.
DpSolution solve_dp(const Scenario& s, const PathSpace& space, const MeanFieldFlow& mu,
                    const MeanFieldFlow& m, const MajorPolicy& alpha, double tie_q = 0.0,
                    double tie_tol = -1.0);

double minor_reward(const Scenario& s, const PathSpace& space, const OccupationFlow& flow,
                    const MeanFieldFlow& mu, const MeanFieldFlow& m);

/// Max absolute violation of the balance constraints by a candidate flow.
double constraint_residual(const Scenario& s, const PathSpace& space, const OccupationFlow& flow,
                           const MeanFieldFlow& m, const MajorPolicy& alpha);

/// LP optimum minus J1 of the candidate flow. Throws InfeasibleFlow when the
/// candidate violates the constraints beyond 1e-6.
double best_response_gap(const Scenario& s, const PathSpace& space, const OccupationFlow& flow,
                         const MeanFieldFlow& mu, const MeanFieldFlow& m,
                         const MajorPolicy& alpha);

/// Occupation-flow invariants: |total stopped mass - 1| and the worst
/// per-time balance error.
std::pair<double, double> occupation_invariants(const PathSpace& space, const OccupationFlow& flow);

/// Stable textual listing of the constraint system (for debugging).
std::string dump_linear_system(const LinearSystem& sys, const Vec& objective);

/// Occupation flow of a randomized stopping profile: sigma[t][node] is the
/// fraction of arriving mass stopped at that node (uniform across the minor
/// grid). Used by the non-convexity check and the test oracles.
OccupationFlow flow_from_stop_profile(const Scenario& s, const PathSpace& space,
                                      const MeanFieldFlow& m, const MajorPolicy& alpha,
                                      const std::vector<Vec>& sigma);

}  // namespace mmfg
