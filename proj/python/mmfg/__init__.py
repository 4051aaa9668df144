"""Solvers for discrete-time major-minor mean-field games of stopping and control.

The heavy lifting lives in the compiled extension ``mmfg._core``; this package
re-exports its public surface.
"""

from mmfg._core import (  # noqa: F401
    CapacityError,
    Certificate,
    ControlCertificate,
    ControlEquilibriumReport,
    ControlMeanField,
    ControlScenario,
    EquilibriumReport,
    FeatureOutOfRange,
    InfeasibleFlow,
    MajorMarginal,
    MajorPolicy,
    MajorValue,
    MassMismatch,
    MeanFieldFlow,
    NonConvexityOutcome,
    NumericalFailure,
    OccupationFlow,
    ParseError,
    PathSpace,
    Residuals,
    Scenario,
    ShapeMismatch,
    SolveConfig,
    StateActionFlow,
    ValidationError,
    anneal_to_relaxed,
    best_response_gap,
    build_control_path_space,
    build_path_space,
    builtin_is_control,
    builtin_names,
    entropy,
    evaluate_major_kernel,
    evaluate_minor_kernel,
    flow_distance,
    load_scenario,
    major_reward,
    make_builtin,
    make_builtin_control,
    marginal_law,
    minor_lp_value,
    minor_reward,
    nonconvexity_regression,
    oracle_control_grid_search,
    oracle_stopping_value,
    paper_family_policy,
    phi_lambda_step,
    report_from_json,
    scenario_from_json,
    solve_control_equilibrium,
    solve_dp,
    solve_regularized,
    solve_regularized_equilibrium,
    solve_unregularized,
    stop_policy_at,
    stop_policy_never,
    uniform_flow,
    verify,
    verify_control,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
