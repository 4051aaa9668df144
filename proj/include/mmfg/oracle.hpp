#pragma once

#include "mmfg/control_mfg.hpp"
#include "mmfg/minor_solver.hpp"

namespace mmfg {
namespace oracle {

struct StoppingSearch {
    double value = 0.0;
    std::uint64_t best_rule = 0;  // bit per (t, node, x) decision point
    std::uint64_t rules = 0;
};

/// Exhaustive search over deterministic adapted stopping rules, one bit per
/// reachable (t < T, node, x) decision point. Refuses (CapacityError) when
/// 2^points exceeds max_rules. Independent of the DP/LP solvers by
/// construction: each rule is evaluated by plain forward propagation.
StoppingSearch enumerate_stopping_rules(const Scenario& s, const PathSpace& space,
                                        const MeanFieldFlow& mu, const MeanFieldFlow& m,
                                        const MajorPolicy& alpha,
                                        std::uint64_t max_rules = 100000);

/// J1 of one deterministic rule (bit set = stop), same bit layout.
double stopping_rule_value(const Scenario& s, const PathSpace& space, const MeanFieldFlow& mu,
                           const MeanFieldFlow& m, const MajorPolicy& alpha, std::uint64_t rule);

std::uint64_t stopping_rule_count(const Scenario& s, const PathSpace& space);

struct ControlSearch {
    double phi = 0.0;       // best constant feature level
    double residual = 0.0;  // worst feature inconsistency at that level
    double major_value = 0.0;
    double minor_value = 0.0;
};

/// Grid search over constant feature profiles for one-feature control
/// scenarios: at each level the major plays the unregularized argmax, the
/// minor best-responds, and the induced flow's features are compared with
/// the level. Refuses (CapacityError) when the feature dimension is not 1
/// or the grid would exceed max_evals.
ControlSearch control_grid_search(const ControlScenario& cs, const PathSpace& space,
                                  int grid_points = 101, std::uint64_t max_evals = 100000);

}  // namespace oracle
}  // namespace mmfg
