import math

import numpy as np
import pytest

from gapnav.candidates import build_candidates, path_to_trajectory
from gapnav.errors import ContractViolation
from gapnav.planner import (
    PlannerConfig,
    evaluate_candidates,
    expected_utility,
    plan,
    select_best,
    step_utility,
)
from gapnav.prediction import AgentState, crowd_arrays
from gapnav.risk import RiskParams

CFG = PlannerConfig()


def ego(pos=(0.0, 5.0), heading=0.0):
    return AgentState(id="ego", position=pos, velocity=(0, 0), heading=heading)


def walker(pos, vel, ident=1):
    return AgentState(id=ident, position=pos, velocity=vel)


@pytest.mark.parametrize("v, err, expect", [(1.0, 0.0, 1.0), (1.0, math.pi, 0.0), (0.5, math.pi / 2, 0.25)])
def test_step_utility(v, err, expect):
    assert step_utility(v, err, 1.0) == pytest.approx(expect, abs=1e-15)


def test_step_utility_rejects_overspeed():
    with pytest.raises(ContractViolation):
        step_utility(1.5, 0.0, 1.0)


def _straight():
    return path_to_trajectory(np.array([[0.0, 0.0], [8.0, 0.0]]), CFG.pgp)


@pytest.mark.parametrize("e", [0.001, 0.01, 0.2])
def test_zero_risk_expected_utility_is_geometric_sum(e):
    cfg = PlannerConfig(risk=RiskParams(e))
    cands = build_candidates(np.zeros(2), 0.0, (8.0, 0.0), cfg.pgp)
    scores = evaluate_candidates(cands, crowd_arrays([]), None, cfg)
    straight = next(s for s in scores if s.trajectory.fan_angle == 0.0)
    closed = (1 - math.exp(-32 * e)) / (1 - math.exp(-e))
    assert straight.expected_utility == pytest.approx(closed, rel=0, abs=1e-9)


def test_survival_only_at_step_zero():
    t = _straight()
    p = np.zeros(32)
    p[0] = 1.0
    assert expected_utility(t, p, 1.0) == pytest.approx(1.0)


def test_lower_survival_gives_lower_utility():
    t = _straight()
    p = np.exp(-0.01 * np.arange(32))
    q = p.copy()
    q[10:] *= 0.5
    assert expected_utility(t, q, 1.0) < expected_utility(t, p, 1.0)


def test_length_mismatch():
    with pytest.raises(ContractViolation):
        expected_utility(_straight(), np.ones(31), 1.0)


def test_empty_scene_picks_straight_with_subgoal_on_line():
    res = plan(ego(), [], None, (10.0, 5.0))
    assert res.best.trajectory.fan_angle == 0.0
    assert np.allclose(res.subgoal, [2.0, 5.0], atol=1e-12)


def test_head_on_agent_forces_turn():
    res = plan(ego(), [walker((5.0, 5.0), (-1.0, 0.0))], None, (10.0, 5.0))
    utils = [s.expected_utility for s in res.per_candidate]
    straight = next(i for i, s in enumerate(res.per_candidate) if s.trajectory.fan_angle == 0.0)
    assert res.best.trajectory.fan_angle != 0.0
    assert utils[straight] < max(utils)


def test_symmetric_scene_breaks_tie_to_negative_angle():
    res = plan(ego(), [walker((5.0, 5.0), (-1.0, 0.0))], None, (10.0, 5.0))
    best = res.best
    twin = next(s for s in res.per_candidate
                if s.trajectory.fan_angle == -best.trajectory.fan_angle
                and s.trajectory.outside_fraction == best.trajectory.outside_fraction)
    assert best.trajectory.fan_angle < 0.0
    assert twin.expected_utility == pytest.approx(best.expected_utility, rel=1e-9)
    # negative angle turns left: subgoal above the line
    assert res.subgoal[1] > 5.0


def test_plan_is_deterministic():
    others = [walker((4.0, 5.5), (-0.8, 0.1), 1), walker((6.0, 3.0), (0.0, 1.0), 2)]
    a = plan(ego(), others, None, (10.0, 5.0))
    b = plan(ego(), others, None, (10.0, 5.0))
    assert a.best_index == b.best_index
    assert np.array_equal(a.subgoal, b.subgoal)
    assert [s.expected_utility for s in a.per_candidate] == [s.expected_utility for s in b.per_candidate]


def test_risk_only_discounts():
    others = [walker((3.0, 5.0), (-1.0, 0.0), 1), walker((5.0, 6.0), (0.0, -1.0), 2)]
    busy = plan(ego(), others, None, (10.0, 5.0)).per_candidate
    empty = plan(ego(), [], None, (10.0, 5.0)).per_candidate
    for b, e in zip(busy, empty):
        assert b.expected_utility <= e.expected_utility + 1e-12
        assert 0.0 <= b.expected_utility <= 32


def test_far_agent_is_irrelevant():
    near = [walker((5.0, 5.0), (-1.0, 0.0))]
    base = plan(ego(), near, None, (10.0, 5.0))
    more = plan(ego(), near + [walker((80.0, 80.0), (0.0, 0.0), 9)], None, (10.0, 5.0))
    assert more.best_index == base.best_index
    for a, b in zip(base.per_candidate, more.per_candidate):
        assert abs(a.expected_utility - b.expected_utility) < 1e-9


def test_argmax_invariant_under_common_survival_scaling():
    others = [walker((4.0, 5.5), (-0.8, 0.1), 1)]
    cands = build_candidates(np.array([0.0, 5.0]), 0.0, (10.0, 5.0), CFG.pgp)
    scores = evaluate_candidates(cands, crowd_arrays(others), None, CFG)
    angles = [c.fan_angle for c in cands]
    fracs = [c.outside_fraction for c in cands]
    base = select_best([s.expected_utility for s in scores], angles, fracs)
    for k in (0.3, 0.7, 2.0):
        scaled = [expected_utility(s.trajectory, k * s.survival.p_surv, 1.0) for s in scores]
        assert select_best(scaled, angles, fracs) == base


def test_select_best_tie_order():
    angles = [0.5, -0.5, 0.2, -0.2]
    assert select_best([1.0, 1.0, 0.5, 0.5], angles) == 1
    assert select_best([1.0, 1.0, 1.0, 1.0], angles) == 3
    assert select_best([1.0, 1.0], [0.3, 0.3], [0.9, 0.0]) == 1
    with pytest.raises(ContractViolation):
        select_best([], [])


def test_subgoal_is_goal_when_close():
    res = plan(ego((9.0, 5.0)), [], None, (10.0, 5.0))
    assert np.array_equal(res.subgoal, [10.0, 5.0])


def test_ego_on_goal_rejected():
    with pytest.raises(ContractViolation):
        plan(ego((10.0, 5.0)), [], None, (10.0, 5.0))
