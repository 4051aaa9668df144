"""End-to-end smoke tests for the python bindings."""

import json

import pytest

import mmfg


@pytest.fixture(scope="module")
def paper():
    s = mmfg.make_builtin("paper-ex-2.1")
    sp = mmfg.build_path_space(s)
    return s, sp


def test_builtins_and_path_space(paper):
    names = mmfg.builtin_names()
    assert "paper-ex-2.1" in names and "control-toy" in names
    s, sp = paper
    assert s.horizon == 2
    assert s.stopping_mode
    assert [sp.slice_size(t) for t in range(3)] == [1, 2, 3]
    csv = sp.nodes_csv(s.major_states)
    assert csv.startswith("t,node_id,parent_id,history")


def test_scenario_json_roundtrip(paper, tmp_path):
    s, _ = paper
    text = s.to_json()
    again = mmfg.scenario_from_json(text)
    assert again.to_json() == text
    path = tmp_path / "scenario.json"
    path.write_text(text)
    loaded = mmfg.load_scenario(str(path))
    assert loaded.name == "paper-ex-2.1"


def test_unregularized_value_and_best_responses(paper):
    s, sp = paper
    mu = mmfg.uniform_flow(s, sp, True)
    m = mmfg.uniform_flow(s, sp, False)
    value, argmax = mmfg.solve_unregularized(s, sp, mu, m)
    assert value.v[0][0] == 1.0
    assert argmax[0][0] == [0]

    holds = mmfg.paper_family_policy(s, sp, 0.0)
    _, flow = mmfg.solve_dp(s, sp, mu, m, holds)
    assert mmfg.minor_reward(s, sp, flow, mu, m) == pytest.approx(0.5, abs=1e-12)

    exits = mmfg.paper_family_policy(s, sp, 1.0)
    _, flow = mmfg.solve_dp(s, sp, mu, m, exits)
    assert mmfg.minor_reward(s, sp, flow, mu, m) == pytest.approx(1.0, abs=1e-12)
    lp_value, _ = mmfg.minor_lp_value(s, sp, mu, m, exits)
    assert lp_value == pytest.approx(1.0, abs=1e-12)


def test_regularized_solve_and_verify(paper):
    s, sp = paper
    cfg = mmfg.SolveConfig()
    cfg.lambda_ = 0.05
    rep = mmfg.solve_regularized_equilibrium(s, sp, cfg)
    assert rep.converged
    assert rep.residuals.major_gap <= 1e-8
    assert rep.alpha.weights[0][0][1] < 0.02

    cert = mmfg.verify(rep, s, sp, 1e-3)
    assert cert.passes()


def test_anneal_and_report_roundtrip(paper):
    s, sp = paper
    cfg = mmfg.SolveConfig()
    cfg.set_anneal(1.0, 0.5, 1e-4)
    rep = mmfg.anneal_to_relaxed(s, sp, cfg)
    assert rep.converged
    assert rep.major_value >= 1.0 - 1e-3
    assert rep.alpha.weights[0][0][1] <= 1e-3

    payload = json.loads(rep.to_json())
    assert payload["kind"] == "stopping"
    back = mmfg.report_from_json(rep.to_json())
    assert mmfg.verify(back, s, sp, 1e-3).passes()


def test_nonconvexity(paper):
    s, sp = paper
    out = mmfg.nonconvexity_regression(s, sp)
    assert out.reproduced
    assert out.min_midpoint_gap > 0.05


def test_errors_are_typed():
    with pytest.raises(mmfg.ParseError):
        mmfg.load_scenario("/no/such/file.json")
    s = mmfg.make_builtin("bankrun-toy")
    with pytest.raises(mmfg.FeatureOutOfRange):
        mmfg.evaluate_major_kernel(s, 0, 1, 0, [1.7])
    row = mmfg.evaluate_major_kernel(s, 0, 1, 4, [1.0])
    assert sum(row) == pytest.approx(1.0, abs=1e-12)


def test_control_variant():
    cs = mmfg.make_builtin_control("control-toy-coupled")
    sp = mmfg.build_control_path_space(cs)
    cfg = mmfg.SolveConfig()
    cfg.damping = 1.0
    cfg.set_anneal(1.0, 0.5, 1e-4)
    rep = mmfg.solve_control_equilibrium(cs, sp, cfg)
    assert rep.converged
    assert mmfg.verify_control(rep, cs, sp, 1e-6).passes()
    phi, residual = mmfg.oracle_control_grid_search(cs, sp, 101)
    assert phi == pytest.approx(0.75, abs=1e-9)
    assert residual <= 1e-9


def test_oracle_agrees_with_dp(paper):
    s, sp = paper
    mu = mmfg.uniform_flow(s, sp, True)
    m = mmfg.uniform_flow(s, sp, False)
    alpha = mmfg.stop_policy_never(s, sp)
    value, rules = mmfg.oracle_stopping_value(s, sp, mu, m, alpha)
    _, flow = mmfg.solve_dp(s, sp, mu, m, alpha)
    assert value == pytest.approx(mmfg.minor_reward(s, sp, flow, mu, m), abs=1e-9)
    assert rules == 8
