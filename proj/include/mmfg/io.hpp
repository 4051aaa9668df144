#pragma once

#include <string>
#include <variant>

#include "mmfg/control_mfg.hpp"
#include "mmfg/equilibrium.hpp"
#include "mmfg/scenario.hpp"

namespace mmfg {

using AnyScenario = std::variant<Scenario, ControlScenario>;

/// Scenario file format: one UTF-8 JSON document, format_version 1, field
/// "kind" either "stopping" or "control". Kernels are nested arrays indexed
/// [t][state][action][next_state] with parallel "coef" arrays per feature.
AnyScenario scenario_from_json(const std::string& text);
AnyScenario load_scenario_file(const std::string& path);

/// Validated stopping scenario, the common case. Throws ParseError when the
/// file holds a control scenario.
Scenario load_scenario(const std::string& path);

std::string scenario_to_json(const Scenario& s);
std::string scenario_to_json(const ControlScenario& cs);
void save_scenario_file(const AnyScenario& s, const std::string& path);

std::string report_to_json(const EquilibriumReport& rep);
std::string report_to_json(const ControlEquilibriumReport& rep);
EquilibriumReport report_from_json(const std::string& text);
ControlEquilibriumReport control_report_from_json(const std::string& text);
bool json_report_is_control(const std::string& text);

// CSV exports (full round-trip decimal precision)
std::string export_policy_csv(const MajorPolicy& alpha);
std::string export_values_csv(const MajorValue& value);
std::string export_marginal_csv(const MajorMarginal& p);
std::string export_mean_field_csv(const MeanFieldFlow& flow);
std::string export_occupation_csv(const OccupationFlow& flow);
std::string export_state_action_csv(const StateActionFlow& v, int n_minor, int n_minor_actions);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace mmfg
