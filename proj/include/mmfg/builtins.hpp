#pragma once

#include <string>
#include <vector>

#include "mmfg/control_mfg.hpp"
#include "mmfg/scenario.hpp"

namespace mmfg {

/// Names of all packaged scenarios (stopping and control kinds).
std::vector<std::string> builtin_names();
bool builtin_is_control(const std::string& name);

Scenario make_builtin(const std::string& name);
ControlScenario make_builtin_control(const std::string& name);

/// Deterministic stopping-mode policies: never stop, or play the stop action
/// at time k on still-active nodes.
MajorPolicy stop_policy_never(const Scenario& s, const PathSpace& space);
MajorPolicy stop_policy_at(const Scenario& s, const PathSpace& space, int k);

/// The two-branch example's optimal family: stop now with probability p at
/// the root, stop at t = 1 otherwise.
MajorPolicy paper_family_policy(const Scenario& s, const PathSpace& space, double p);

}  // namespace mmfg
