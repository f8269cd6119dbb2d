import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import wilcoxon as scipy_wilcoxon

from gapnav.errors import ContractViolation
from gapnav.metrics import avg_social_force, compute_metrics, midranks, success_metrics, svr, wilcoxon_paired
from gapnav.sim import RunRecord, ScenarioConfig, run_scenario

from oracles import wilcoxon_bruteforce

CFG = ScenarioConfig()


def trace(positions, velocities=None, arrival_tick=None):
    """RunRecord around a synthetic (T, M, 2) trace; velocities default to finite differences."""
    positions = np.asarray(positions, dtype=float)
    if velocities is None:
        velocities = np.zeros_like(positions)
        velocities[1:] = np.diff(positions, axis=0) / CFG.sim_dt
        velocities[0] = velocities[1] if len(positions) > 1 else 0.0
    t = len(positions)
    return RunRecord(
        config=CFG, times=np.arange(t) * CFG.sim_dt, positions=positions, velocities=np.asarray(velocities, float),
        subgoals=np.full((t, 2), np.nan), moving=np.zeros(t, bool), colliding=np.zeros(t, bool),
        space_violating=np.zeros(t, bool), ego_force=np.zeros(t),
        outcome="reached" if arrival_tick is not None else "timeout", arrival_tick=arrival_tick,
    )


def walk_with_neighbour(gaps):
    """Ego walks along x at 1 m/s; one neighbour sits at the given lateral gap each tick."""
    n = len(gaps)
    ego = np.stack([np.arange(n) * 0.1, np.zeros(n)], 1)
    other = ego + np.stack([np.zeros(n), np.asarray(gaps, float)], 1)
    pos = np.stack([ego, other], 1)
    vel = np.zeros_like(pos)
    vel[:, 0, 0] = 1.0
    return trace(pos, vel)


def test_straight_run():
    n = 101
    ego = np.stack([np.linspace(0, 10, n), np.full(n, 5.0)], 1)[:, None, :]
    time, path, coll = success_metrics(trace(ego, arrival_tick=100))
    assert time == pytest.approx(10.0)
    assert path == pytest.approx(10.0)
    assert coll == 0.0


def test_two_collisions_in_100_moving_ticks():
    gaps = np.full(100, 3.0)
    gaps[[10, 50]] = 0.5
    assert success_metrics(walk_with_neighbour(gaps))[2] == pytest.approx(0.02)


def test_standing_ego_is_never_responsible():
    pos = np.zeros((50, 2, 2))
    pos[:, 1] = (0.2, 0.0)
    rec = trace(pos, np.zeros_like(pos))
    assert success_metrics(rec)[2] == 0.0
    assert svr(rec) == 0.0


def test_timeout_time():
    rec = trace(np.zeros((5, 1, 2)))
    assert success_metrics(rec)[0] == CFG.timeout


def test_svr_examples():
    assert svr(walk_with_neighbour(np.full(10, 1.5))) == 0.0
    gaps = np.full(10, 1.5)
    gaps[3] = 0.9
    assert svr(walk_with_neighbour(gaps)) == pytest.approx(0.1)
    assert svr(walk_with_neighbour(np.full(10, 1.0))) == 0.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.1, 3.0), min_size=2, max_size=40), st.floats(0.1, 2.0), st.floats(0.1, 2.0))
def test_svr_monotone_and_bounds_collisions(gaps, t1, t2):
    rec = walk_with_neighbour(gaps)
    lo, hi = sorted((t1, t2))
    assert svr(rec, lo) <= svr(rec, hi)
    assert success_metrics(rec)[2] <= svr(rec, 1.0)


def test_force_empty_stage_is_zero():
    assert avg_social_force(trace(np.zeros((4, 1, 2)))) == 0.0


def _static(layout):
    pos = np.array([[[0.0, 0.0]] + layout] * 3)
    vel = np.zeros_like(pos)
    vel[:, 0] = (1.0, 0.0)
    return trace(pos, vel)


def test_force_larger_when_closer():
    assert avg_social_force(_static([[1.0, 0.0]])) > avg_social_force(_static([[2.0, 0.0]]))


def test_force_superposition_on_fixed_layout():
    # both neighbours 1 m away and 20 deg apart, so their pushes share a direction
    single = avg_social_force(_static([[1.0, 0.0]]))
    a = math.radians(20)
    pair = avg_social_force(_static([[1.0, 0.0], [math.cos(a), math.sin(a)]]))
    assert pair >= single
    doubled = avg_social_force(_static([[1.0, 0.0], [1.0, 0.0]]))
    assert doubled == pytest.approx(2 * single, rel=1e-12)


def test_force_sum_is_vectorial():
    # perpendicular neighbours partly cancel: the magnitude of the sum is not additive
    single = avg_social_force(_static([[1.0, 0.0]]))
    assert avg_social_force(_static([[1.0, 0.0], [0.0, 1.0]])) < single


def _rigid(rec, angle, shift):
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return trace(rec.positions @ rot.T + shift, rec.velocities @ rot.T, rec.arrival_tick)


def test_metrics_invariant_under_rigid_motion():
    rec = run_scenario(ScenarioConfig(density=0.3, seed=4, ego_planner="pgp+sf", timeout=6.0))
    base = trace(rec.positions, rec.velocities, rec.arrival_tick)
    moved = _rigid(base, 0.7, np.array([3.0, -2.0]))
    a, b = compute_metrics(base).as_dict(), compute_metrics(moved).as_dict()
    for key in a:
        if key == "outcome":
            assert a[key] == b[key]
        else:
            assert b[key] == pytest.approx(a[key], rel=1e-9, abs=1e-12)


# -- Wilcoxon ------------------------------------------------------------------


def test_identical_samples():
    assert wilcoxon_paired([1, 2, 3, 4, 5], [1, 2, 3, 4, 5]) == 1.0


def test_shift_by_one_n10():
    a = np.arange(10.0)
    assert wilcoxon_paired(a, a + 1) == pytest.approx(2 / 1024, abs=1e-15)
    assert wilcoxon_paired(a, a + 1) == 0.001953125


def test_n5_shift():
    assert wilcoxon_paired([1, 2, 3, 4, 5], [2, 3, 4, 5, 6]) == pytest.approx(0.0625, abs=1e-15)


def test_contract():
    with pytest.raises(ContractViolation):
        wilcoxon_paired([1, 2, 3, 4], [1, 2, 3, 5])
    with pytest.raises(ContractViolation):
        wilcoxon_paired([1, 2, 3, 4, 5], [1, 2, 3, 4])


def test_midranks():
    assert list(midranks([3.0, 1.0, 3.0, 2.0])) == [3.5, 1.0, 3.5, 2.0]


small_pairs = st.integers(5, 10).flatmap(
    lambda n: st.tuples(st.lists(st.integers(-4, 4), min_size=n, max_size=n),
                        st.lists(st.integers(-4, 4), min_size=n, max_size=n))
)


@settings(max_examples=300, deadline=None)
@given(small_pairs)
def test_exact_matches_bruteforce_and_is_symmetric(pair):
    a, b = pair
    p = wilcoxon_paired(a, b)
    assert p == pytest.approx(wilcoxon_bruteforce(a, b), abs=1e-12)
    assert p == pytest.approx(wilcoxon_paired(b, a), abs=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_exact_matches_scipy_without_ties(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=20), rng.normal(0.3, 1, size=20)
    expect = scipy_wilcoxon(b - a, method="exact").pvalue
    assert wilcoxon_paired(a, b) == pytest.approx(expect, rel=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_normal_approximation_matches_scipy(seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 6, 60).astype(float)
    b = a + rng.integers(-2, 4, 60)
    expect = scipy_wilcoxon(b - a, zero_method="wilcox", correction=False, method="approx").pvalue
    assert wilcoxon_paired(a, b) == pytest.approx(expect, rel=1e-9)
