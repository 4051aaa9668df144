#pragma once

#include <functional>
#include <utility>

#include "mmfg/mean_field.hpp"
#include "mmfg/scenario.hpp"
#include "mmfg/types.hpp"

namespace mmfg {

/// Shannon entropy of one action weight vector: -sum w ln w for finite sets,
/// and the volume-weighted differential form -sum w v ln w for action grids
/// (w are density values). Point masses give 0 by the 0 ln 0 convention.
double entropy(const Vec& weights, const ActionSpace& actions);

/// The major player's tables behind a uniform interface, so the stopping and
/// control variants share one DP. Feature vectors are supplied per (t, node)
/// by MajorFieldFeatures.
struct MajorProblem {
    int horizon = 0;
    int n_states = 0;
    const ActionSpace* actions = nullptr;
    Vec initial;  // law over major states
    std::function<double(int t, int s0, int a, const Vec& feats)> f0;
    std::function<Vec(int t, int s0, int a, const Vec& feats)> p0_row;
    std::function<double(int s0, const Vec& feats)> g0;
};

struct MajorFieldFeatures {
    std::vector<std::vector<Vec>> run;  // [t][node], t in 0..T-1
    std::vector<Vec> terminal;          // [node] at T
};

MajorProblem major_problem_of(const Scenario& s);
MajorFieldFeatures features_from_flows(const Scenario& s, const PathSpace& space,
                                       const MeanFieldFlow& mu, const MeanFieldFlow& m);

struct RegularizedSolution {
    MajorPolicy policy;
    MajorValue value;
};

RegularizedSolution solve_regularized_core(const MajorProblem& prob, const PathSpace& space,
                                           const MajorFieldFeatures& feats, double lambda);
std::pair<MajorValue, ArgmaxSets> solve_unregularized_core(const MajorProblem& prob,
                                                           const PathSpace& space,
                                                           const MajorFieldFeatures& feats,
                                                           double eta = -1.0);
double major_reward_core(const MajorProblem& prob, const PathSpace& space, const MajorPolicy& alpha,
                         const MajorFieldFeatures& feats, double lambda);

/// Entropy-regularized backward DP; the unique optimum is the Gibbs policy
/// over the per-action advantages, computed with a log-sum-exp shift.
RegularizedSolution solve_regularized(const Scenario& s, const PathSpace& space,
                                      const MeanFieldFlow& mu, const MeanFieldFlow& m,
                                      double lambda);

/// Plain max-over-actions DP. Returns the value and, per (t, node), the set
/// of actions within eta of the maximum (eta < 0 picks 1e-9 * (1 + |V|_inf)).
std::pair<MajorValue, ArgmaxSets> solve_unregularized(const Scenario& s, const PathSpace& space,
                                                      const MeanFieldFlow& mu,
                                                      const MeanFieldFlow& m, double eta = -1.0);

/// J0 of an arbitrary policy by forward propagation of the path marginal;
/// lambda > 0 adds the entropy terms.
double major_reward(const Scenario& s, const PathSpace& space, const MajorPolicy& alpha,
                    const MeanFieldFlow& mu, const MeanFieldFlow& m, double lambda);

/// Largest over (t, node) of the policy mass outside the argmax band.
double mass_outside_argmax(const MajorPolicy& alpha, const ArgmaxSets& sets,
                           const ActionSpace& actions);

}  // namespace mmfg
