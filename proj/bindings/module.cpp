#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mmfg/builtins.hpp"
#include "mmfg/io.hpp"
#include "mmfg/oracle.hpp"

namespace py = pybind11;
using namespace mmfg;

namespace {

Residuals dict_residuals(const Residuals& r) { return r; }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Solvers for discrete-time major-minor mean-field games of stopping and control";

    py::register_exception<ParseError>(m, "ParseError");
    py::register_exception<ValidationError>(m, "ValidationError");
    py::register_exception<FeatureOutOfRange>(m, "FeatureOutOfRange");
    py::register_exception<CapacityError>(m, "CapacityError");
    py::register_exception<ShapeMismatch>(m, "ShapeMismatch");
    py::register_exception<MassMismatch>(m, "MassMismatch");
    py::register_exception<InfeasibleFlow>(m, "InfeasibleFlow");
    py::register_exception<NumericalFailure>(m, "NumericalFailure");

    py::class_<Scenario>(m, "Scenario")
        .def_readonly("name", &Scenario::name)
        .def_readonly("horizon", &Scenario::horizon)
        .def_readonly("major_states", &Scenario::major_states)
        .def_readonly("minor_grid", &Scenario::minor_grid)
        .def_readonly("stopping_mode", &Scenario::stopping_mode)
        .def_property_readonly("n_actions", &Scenario::n_actions)
        .def("to_json", [](const Scenario& s) { return scenario_to_json(s); });

    py::class_<ControlScenario>(m, "ControlScenario")
        .def_readonly("name", &ControlScenario::name)
        .def_readonly("horizon", &ControlScenario::horizon)
        .def_readonly("major_states", &ControlScenario::major_states)
        .def_readonly("minor_grid", &ControlScenario::minor_grid)
        .def("to_json", [](const ControlScenario& cs) { return scenario_to_json(cs); });

    py::class_<PathSpace>(m, "PathSpace")
        .def_property_readonly("horizon", [](const PathSpace& p) { return p.horizon; })
        .def("slice_size", &PathSpace::slice_size)
        .def("total_nodes", &PathSpace::total_nodes)
        .def("history",
             [](const PathSpace& p, int t, int i) { return p.node(t, i).history; })
        .def("nodes_csv", [](const PathSpace& p, const std::vector<std::string>& labels) {
            return export_nodes_csv(p, labels);
        });

    py::class_<MeanFieldFlow>(m, "MeanFieldFlow")
        .def_readonly("cells", &MeanFieldFlow::cells);
    py::class_<OccupationFlow>(m, "OccupationFlow")
        .def_readonly("mu_tilde", &OccupationFlow::mu_tilde)
        .def_readonly("m_tilde", &OccupationFlow::m_tilde)
        .def("stopped_mass", &OccupationFlow::stopped_mass);
    py::class_<MajorPolicy>(m, "MajorPolicy").def_readonly("weights", &MajorPolicy::weights);
    py::class_<MajorValue>(m, "MajorValue").def_readonly("v", &MajorValue::v);
    py::class_<MajorMarginal>(m, "MajorMarginal").def_readonly("p", &MajorMarginal::p);
    py::class_<StateActionFlow>(m, "StateActionFlow").def_readonly("v", &StateActionFlow::v);
    py::class_<ControlMeanField>(m, "ControlMeanField")
        .def_readonly("cells", &ControlMeanField::cells);

    py::class_<Residuals>(m, "Residuals")
        .def_readonly("major_gap", &Residuals::major_gap)
        .def_readonly("minor_gap", &Residuals::minor_gap)
        .def_readonly("consistency", &Residuals::consistency)
        .def_readonly("iteration_delta", &Residuals::iteration_delta)
        .def_readonly("support_outside", &Residuals::support_outside);

    py::class_<SolveConfig>(m, "SolveConfig")
        .def(py::init<>())
        .def_readwrite("lambda_", &SolveConfig::lambda)
        .def_readwrite("damping", &SolveConfig::damping)
        .def_readwrite("tol", &SolveConfig::tol)
        .def_readwrite("max_iters", &SolveConfig::max_iters)
        .def_readwrite("tie_q", &SolveConfig::tie_q)
        .def_readwrite("seed", &SolveConfig::seed)
        .def_readwrite("random_init", &SolveConfig::random_init)
        .def_readwrite("eps_final", &SolveConfig::eps_final)
        .def_readwrite("eps_support", &SolveConfig::eps_support)
        .def("set_anneal", [](SolveConfig& c, double start, double factor, double min) {
            c.anneal = AnnealSchedule{start, factor, min};
        });

    py::class_<EquilibriumReport>(m, "EquilibriumReport")
        .def_readonly("scenario_name", &EquilibriumReport::scenario_name)
        .def_property_readonly("lambda_", [](const EquilibriumReport& r) { return r.lambda; })
        .def_readonly("annealed", &EquilibriumReport::annealed)
        .def_readonly("mu", &EquilibriumReport::mu)
        .def_readonly("m", &EquilibriumReport::m)
        .def_readonly("alpha", &EquilibriumReport::alpha)
        .def_readonly("flow", &EquilibriumReport::flow)
        .def_readonly("p", &EquilibriumReport::p)
        .def_readonly("major_value", &EquilibriumReport::major_value)
        .def_readonly("minor_value", &EquilibriumReport::minor_value)
        .def_property_readonly("residuals",
                               [](const EquilibriumReport& r) { return dict_residuals(r.residuals); })
        .def_readonly("iterations", &EquilibriumReport::iterations)
        .def_readonly("converged", &EquilibriumReport::converged)
        .def("to_json", [](const EquilibriumReport& r) { return report_to_json(r); });

    py::class_<ControlEquilibriumReport>(m, "ControlEquilibriumReport")
        .def_readonly("scenario_name", &ControlEquilibriumReport::scenario_name)
        .def_property_readonly("lambda_",
                               [](const ControlEquilibriumReport& r) { return r.lambda; })
        .def_readonly("mu", &ControlEquilibriumReport::mu)
        .def_readonly("alpha0", &ControlEquilibriumReport::alpha0)
        .def_readonly("v", &ControlEquilibriumReport::v)
        .def_readonly("major_value", &ControlEquilibriumReport::major_value)
        .def_readonly("minor_value", &ControlEquilibriumReport::minor_value)
        .def_property_readonly(
            "residuals",
            [](const ControlEquilibriumReport& r) { return dict_residuals(r.residuals); })
        .def_readonly("iterations", &ControlEquilibriumReport::iterations)
        .def_readonly("converged", &ControlEquilibriumReport::converged)
        .def("to_json", [](const ControlEquilibriumReport& r) { return report_to_json(r); });

    py::class_<Certificate>(m, "Certificate")
        .def_property_readonly("major_ok", [](const Certificate& c) { return c.major.ok; })
        .def_property_readonly("minor_ok", [](const Certificate& c) { return c.minor.ok; })
        .def_property_readonly("consistency_ok",
                               [](const Certificate& c) { return c.consistency.ok; })
        .def_property_readonly("major_slack", [](const Certificate& c) { return c.major.slack; })
        .def_property_readonly("minor_slack", [](const Certificate& c) { return c.minor.slack; })
        .def_property_readonly("consistency_slack",
                               [](const Certificate& c) { return c.consistency.slack; })
        .def("passes", &Certificate::pass);

    py::class_<ControlCertificate>(m, "ControlCertificate")
        .def_property_readonly("major_ok", [](const ControlCertificate& c) { return c.major.ok; })
        .def_property_readonly("minor_ok", [](const ControlCertificate& c) { return c.minor.ok; })
        .def_property_readonly("consistency_ok",
                               [](const ControlCertificate& c) { return c.consistency.ok; })
        .def("passes", &ControlCertificate::pass);

    py::class_<NonConvexityOutcome>(m, "NonConvexityOutcome")
        .def_readonly("reproduced", &NonConvexityOutcome::reproduced)
        .def_readonly("min_midpoint_gap", &NonConvexityOutcome::min_midpoint_gap);

    m.def("builtin_names", &builtin_names);
    m.def("builtin_is_control", &builtin_is_control);
    m.def("make_builtin", &make_builtin);
    m.def("make_builtin_control", &make_builtin_control);
    m.def("load_scenario", &load_scenario);
    m.def("scenario_from_json", [](const std::string& text) {
        AnyScenario any = scenario_from_json(text);
        return py::cast(std::get<Scenario>(any));
    });
    m.def("build_path_space", &build_path_space, py::arg("scenario"),
          py::arg("node_budget") = kDefaultNodeBudget);
    m.def("build_control_path_space", &build_control_path_space, py::arg("scenario"),
          py::arg("node_budget") = kDefaultNodeBudget);

    m.def("uniform_flow", [](const Scenario& s, const PathSpace& space, bool with_terminal) {
        return MeanFieldFlow::uniform(space, s.n_minor(), with_terminal);
    });
    m.def("evaluate_major_kernel", &evaluate_major_kernel);
    m.def("evaluate_minor_kernel", &evaluate_minor_kernel);
    m.def("entropy", &entropy);
    m.def("solve_regularized",
          [](const Scenario& s, const PathSpace& space, const MeanFieldFlow& mu,
             const MeanFieldFlow& m, double lambda) {
              RegularizedSolution sol = solve_regularized(s, space, mu, m, lambda);
              return py::make_tuple(sol.policy, sol.value);
          });
    m.def("solve_unregularized",
          [](const Scenario& s, const PathSpace& space, const MeanFieldFlow& mu,
             const MeanFieldFlow& m) {
              auto [value, sets] = solve_unregularized(s, space, mu, m);
              return py::make_tuple(value, sets.actions);
          });
    m.def("major_reward", &major_reward);
    m.def("marginal_law", &marginal_law);
    m.def("flow_distance", &flow_distance);
    m.def("solve_dp",
          [](const Scenario& s, const PathSpace& space, const MeanFieldFlow& mu,
             const MeanFieldFlow& m, const MajorPolicy& alpha, double tie_q) {
              DpSolution sol = solve_dp(s, space, mu, m, alpha, tie_q);
              return py::make_tuple(sol.value.w, sol.flow);
          },
          py::arg("scenario"), py::arg("space"), py::arg("mu"), py::arg("m"), py::arg("alpha"),
          py::arg("tie_q") = 0.0);
    m.def("minor_reward", &minor_reward);
    m.def("best_response_gap", &best_response_gap);
    m.def("minor_lp_value",
          [](const Scenario& s, const PathSpace& space, const MeanFieldFlow& mu,
             const MeanFieldFlow& m, const MajorPolicy& alpha) {
              LinearSystem sys = assemble_constraints(s, space, m, alpha);
              Vec obj = minor_objective(s, space, mu, m, sys);
              LpFlowSolution sol = solve_lp(sys, obj, space);
              return py::make_tuple(sol.value, sol.flow);
          });

    m.def("stop_policy_never", &stop_policy_never);
    m.def("stop_policy_at", &stop_policy_at);
    m.def("paper_family_policy", &paper_family_policy);

    m.def("phi_lambda_step",
          [](const Scenario& s, const PathSpace& space, const MeanFieldFlow& mu,
             const MeanFieldFlow& m, const SolveConfig& cfg) {
              StepResult r = phi_lambda_step(s, space, mu, m, cfg);
              return py::make_tuple(r.mu, r.m, r.alpha, r.flow, r.p);
          });
    m.def("solve_regularized_equilibrium", &solve_regularized_equilibrium);
    m.def("anneal_to_relaxed", &anneal_to_relaxed);
    m.def("verify", &verify);
    m.def("nonconvexity_regression", &nonconvexity_regression);
    m.def("report_from_json", &report_from_json);

    m.def("solve_control_equilibrium", &solve_control_equilibrium);
    m.def("verify_control", &verify_control);

    m.def("oracle_stopping_value",
          [](const Scenario& s, const PathSpace& space, const MeanFieldFlow& mu,
             const MeanFieldFlow& m, const MajorPolicy& alpha, std::uint64_t max_rules) {
              auto res = oracle::enumerate_stopping_rules(s, space, mu, m, alpha, max_rules);
              return py::make_tuple(res.value, res.rules);
          },
          py::arg("scenario"), py::arg("space"), py::arg("mu"), py::arg("m"), py::arg("alpha"),
          py::arg("max_rules") = 100000);
    m.def("oracle_control_grid_search",
          [](const ControlScenario& cs, const PathSpace& space, int grid_points) {
              auto res = oracle::control_grid_search(cs, space, grid_points);
              return py::make_tuple(res.phi, res.residual);
          },
          py::arg("scenario"), py::arg("space"), py::arg("grid_points") = 101);
}
