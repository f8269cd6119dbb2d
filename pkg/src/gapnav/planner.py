"""Gap planner: pick the fan candidate with the best survival-weighted utility.

The planner predicts all other agents at constant velocity, scores every
candidate trajectory by summing per-step progress utility weighted by the
probability of surviving to that step, and hands a subgoal along the
winner's initial heading to a short-horizon collision-avoidance controller.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .candidates import CandidateTrajectory, PgpConfig, build_candidates
from .errors import ContractViolation
from .prediction import SigmaGrowthParams, crowd_arrays, predict_arrays, sigma_schedule
from .risk import (
    RiskParams,
    SurvivalProfile,
    cooperative_risk_tensor,
    static_risk_tensor,
    survival_from_rates,
)

TIE_RTOL = 1e-9


@dataclass(frozen=True)
class SubgoalSpec:
    cca_v_max: float = 1.0
    cca_horizon: float = 2.0

    def __post_init__(self):
        if self.cca_v_max <= 0 or self.cca_horizon <= 0:
            raise ContractViolation("subgoal speed and horizon must be positive")

    @property
    def distance(self):
        return self.cca_v_max * self.cca_horizon


@dataclass(frozen=True)
class PlannerConfig:
    pgp: PgpConfig = field(default_factory=PgpConfig)
    sigma: SigmaGrowthParams = field(default_factory=SigmaGrowthParams)
    risk: RiskParams = field(default_factory=RiskParams)
    subgoal: SubgoalSpec = field(default_factory=SubgoalSpec)


@dataclass
class CandidateScore:
    trajectory: CandidateTrajectory
    survival: SurvivalProfile
    expected_utility: float


@dataclass
class EvaluationResult:
    per_candidate: list
    best_index: int
    subgoal: np.ndarray

    @property
    def best(self):
        return self.per_candidate[self.best_index]


def step_utility(speed, heading_error, v_max):
    """Progress utility of one step, in [0, 1]."""
    speed = np.asarray(speed, dtype=float)
    if np.any(speed > v_max * (1.0 + 1e-12)) or np.any(speed < 0.0):
        raise ContractViolation("speed must lie in [0, v_max]")
    u = (speed / v_max) * (np.cos(heading_error) + 1.0) / 2.0
    return float(u) if u.ndim == 0 else u


def heading_errors(traj):
    """Angle between each step's heading and the direction to the trajectory goal."""
    to_goal = traj.goal_point[None, :] - traj.positions
    goal_dir = np.arctan2(to_goal[:, 1], to_goal[:, 0])
    return goal_dir - traj.headings


def trajectory_utilities(traj, v_max):
    """Per-step utility; steps that end on the planning goal count as full progress."""
    u = step_utility(traj.speeds, heading_errors(traj), v_max)
    return np.where(traj.arrived, 1.0, u)


def expected_utility(traj, survival, v_max):
    p_surv = survival.p_surv if isinstance(survival, SurvivalProfile) else np.asarray(survival)
    if len(p_surv) != len(traj.speeds):
        raise ContractViolation(
            f"survival has {len(p_surv)} steps but trajectory has {len(traj.speeds)}"
        )
    return float(np.sum(p_surv * trajectory_utilities(traj, v_max)))


def select_best(utilities, fan_angles, fractions=None):
    """Index of the best candidate with deterministic tie-breaking.

    Utilities within a relative ``TIE_RTOL`` of the maximum tie; among them
    the smallest |fan angle| wins, then the negative (left) angle, then the
    smaller outside fraction.
    """
    utilities = np.asarray(utilities, dtype=float)
    if len(utilities) == 0:
        raise ContractViolation("empty candidate set")
    top = utilities.max()
    tied = np.flatnonzero(utilities >= top - TIE_RTOL * abs(top))
    if fractions is None:
        fractions = np.zeros(len(utilities))

    def key(i):
        a = round(float(fan_angles[i]), 12)
        return (abs(a), a, float(fractions[i]), i)

    return int(min(tied, key=key))


def _subgoal(ego_position, traj, map_goal, spec):
    d = spec.distance
    if np.linalg.norm(np.asarray(map_goal) - ego_position) <= d:
        return np.asarray(map_goal, dtype=float).copy()
    moving = np.flatnonzero(traj.speeds > 0.0)
    heading = traj.headings[moving[0]] if len(moving) else traj.headings[0]
    return ego_position + d * np.array([math.cos(heading), math.sin(heading)])


def evaluate_candidates(candidates, crowd, obstacles, config):
    """Survival profiles and expected utilities for a list of candidates."""
    pgp = config.pgp
    n = pgp.horizon_steps
    ego_pos = np.stack([c.positions for c in candidates])
    ego_speed = np.stack([c.speeds for c in candidates])
    ego_sig = sigma_schedule(ego_speed, config.sigma)

    rates = np.full(ego_sig.shape, config.risk.p_escape)
    n_clamped = 0
    if len(crowd.positions):
        other_pos, other_sig = predict_arrays(crowd.positions, crowd.velocities, n, pgp.dt, config.sigma)
        coop, n_clamped = cooperative_risk_tensor(
            ego_pos, ego_sig, config.sigma.sigma0, other_pos, other_sig,
            np.full(len(other_pos), config.sigma.sigma0),
        )
        rates = rates + coop.sum(axis=1)
    if obstacles is not None and len(obstacles):
        rates = rates + static_risk_tensor(ego_pos, ego_sig, obstacles)
    p_surv = survival_from_rates(rates)

    # per-step utilities of every candidate in one pass
    to_goal = np.stack([c.goal_point for c in candidates])[:, None, :] - ego_pos
    err = np.arctan2(to_goal[..., 1], to_goal[..., 0]) - np.stack([c.headings for c in candidates])
    u = step_utility(ego_speed, err, pgp.v_max)
    u = np.where(np.stack([c.arrived for c in candidates]), 1.0, u)
    eu = np.sum(p_surv * u, axis=1)

    scores = []
    for k, c in enumerate(candidates):
        prof = SurvivalProfile(p_surv=p_surv[k], per_step_rates=rates[k], n_clamped=n_clamped)
        scores.append(CandidateScore(c, prof, float(eu[k])))
    return scores


def plan(ego, others, obstacles, map_goal, config=None):
    """One planning step: returns every candidate's score, the winner and a subgoal."""
    config = config or PlannerConfig()
    map_goal = np.asarray(map_goal, dtype=float)
    if np.array_equal(ego.position, map_goal):
        raise ContractViolation("ego already sits on the map goal")
    candidates = build_candidates(ego.position, ego.heading, map_goal, config.pgp)
    if not candidates:
        raise ContractViolation("empty candidate set")
    scores = evaluate_candidates(candidates, crowd_arrays(others), obstacles, config)
    best = select_best(
        [s.expected_utility for s in scores],
        [c.fan_angle for c in candidates],
        [c.outside_fraction for c in candidates],
    )
    subgoal = _subgoal(ego.position, candidates[best], map_goal, config.subgoal)
    return EvaluationResult(per_candidate=scores, best_index=best, subgoal=subgoal)
