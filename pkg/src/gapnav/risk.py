"""Cooperative probabilistic collision risk and survival analysis.

Every agent's future location at prediction step ``i`` is an isotropic
Gaussian with mean ``mu_i`` and standard deviation ``sigma_i``. The raw
pairwise collision probability compares the two location distributions and
is normalised by the combined initial variance, so it equals one for a
co-located pair at step 0. A cooperative factor ``tau <= 1`` then discounts
risk that lies further in the future, where both agents have room to evade.
Per-step risks from all sources are read as event rates and integrated into
a survival probability.

The scalar functions mirror the mathematical definitions one-to-one. The
``*_tensor`` variants evaluate the same formulas for many candidate
trajectories at once and are what the planner uses.
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import erf

from .errors import ContractViolation
from .geometry import point_segment_distance


@dataclass
class GaussianPrediction:
    """Predicted mean positions and standard deviations over the horizon."""

    positions: np.ndarray
    sigmas: np.ndarray
    sigma0: float
    dt: float
    agent_id: object = None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        self.sigmas = np.asarray(self.sigmas, dtype=float).reshape(-1)
        self.sigma0 = float(self.sigma0)
        if len(self.positions) < 1 or len(self.positions) != len(self.sigmas):
            raise ContractViolation(
                f"positions ({len(self.positions)}) and sigmas ({len(self.sigmas)}) "
                "must have the same non-zero length"
            )
        if np.any(self.sigmas <= 0.0):
            raise ContractViolation("all sigmas must be positive")
        if self.sigmas[0] != self.sigma0:
            raise ContractViolation("sigmas[0] must equal sigma0")
        if np.any(np.diff(self.sigmas) < 0.0):
            raise ContractViolation("sigmas must be non-decreasing")

    def __len__(self):
        return len(self.sigmas)


@dataclass(frozen=True)
class RiskParams:
    p_escape: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.p_escape < 1.0:
            raise ContractViolation("p_escape must lie in (0, 1)")


@dataclass
class StaticObstacle:
    """A static object made of line segments, each ((x1, y1), (x2, y2))."""

    segments: np.ndarray

    def __post_init__(self):
        self.segments = np.asarray(self.segments, dtype=float).reshape(-1, 2, 2)
        lengths = np.linalg.norm(self.segments[:, 1] - self.segments[:, 0], axis=-1)
        if np.any(lengths == 0.0):
            raise ContractViolation("obstacle segments need two distinct endpoints")


@dataclass
class SurvivalProfile:
    p_surv: np.ndarray
    per_step_rates: np.ndarray
    n_clamped: int = field(default=0, compare=False)

    def __len__(self):
        return len(self.p_surv)


def clip_probability(values):
    """Clamp to [0, 1]; returns the clipped array and the number of clamped entries."""
    values = np.asarray(values, dtype=float)
    n_clamped = int(np.count_nonzero((values < 0.0) | (values > 1.0)))
    return np.clip(values, 0.0, 1.0), n_clamped


def _check_step(ego, other, step):
    if len(ego) != len(other):
        raise ContractViolation(
            f"prediction horizons differ: ego has {len(ego)} steps, other has {len(other)}"
        )
    if not 0 <= step < len(ego):
        raise ContractViolation(f"step {step} outside horizon of {len(ego)}")


def pairwise_collision_prob(ego, other, step):
    """Raw collision probability of two predicted agents at ``step``."""
    _check_step(ego, other, step)
    diff = ego.positions[step] - other.positions[step]
    var_i = ego.sigmas[step] ** 2 + other.sigmas[step] ** 2
    var_0 = ego.sigma0 ** 2 + other.sigma0 ** 2
    p = np.exp(-(diff @ diff) / (2.0 * var_i)) * (var_0 / var_i)
    return float(min(max(p, 0.0), 1.0))


def cooperative_factor(ego, other, step):
    _check_step(ego, other, step)
    return float((ego.sigma0 / ego.sigmas[step]) * (other.sigma0 / other.sigmas[step]))


def cooperative_collision_prob(ego, other, step):
    p = pairwise_collision_prob(ego, other, step) * cooperative_factor(ego, other, step)
    return float(min(max(p, 0.0), 1.0))


def _obstacle_segments(obstacles):
    if obstacles is None:
        return np.empty((0, 2, 2))
    if isinstance(obstacles, StaticObstacle):
        obstacles = [obstacles]
    segs = [o.segments for o in obstacles]
    if not segs:
        return np.empty((0, 2, 2))
    return np.concatenate(segs, axis=0)


def static_collision_prob(ego_position, ego_sigma, obstacles):
    """Collision probability with the nearest static segment (1D Gaussian model)."""
    if ego_sigma <= 0.0:
        raise ContractViolation("ego_sigma must be positive")
    segs = _obstacle_segments(obstacles)
    if len(segs) == 0:
        return 0.0
    d = point_segment_distance(np.asarray(ego_position, dtype=float), segs[:, 0], segs[:, 1]).min()
    return float(1.0 - erf(d / (ego_sigma * np.sqrt(2.0))))


def survival_analysis(coop_probs, static_probs, params):
    """Integrate per-step risks of all sources into a survival profile.

    ``coop_probs`` is (steps, agents); ``static_probs`` is (steps,).
    """
    coop = np.asarray(coop_probs, dtype=float)
    static = np.asarray(static_probs, dtype=float).reshape(-1)
    if coop.ndim == 1:
        coop = coop[:, None]
    if coop.shape[0] != static.shape[0]:
        raise ContractViolation(
            f"horizon mismatch: {coop.shape[0]} coop steps vs {static.shape[0]} static steps"
        )
    if np.any(coop < 0.0) or np.any(static < 0.0):
        raise ContractViolation("risk inputs must be non-negative")
    if np.any(coop > 1.0) or np.any(static > 1.0):
        raise ContractViolation("risk inputs must not exceed 1")
    rates = coop.sum(axis=1) + static + params.p_escape
    return SurvivalProfile(p_surv=survival_from_rates(rates), per_step_rates=rates)


def survival_from_rates(rates):
    """p_surv[..., i] = exp(-sum_{j<i} rates[..., j]); p_surv[..., 0] = 1."""
    rates = np.asarray(rates, dtype=float)
    cum = np.cumsum(rates, axis=-1)
    shifted = np.concatenate([np.zeros(rates.shape[:-1] + (1,)), cum[..., :-1]], axis=-1)
    return np.exp(-shifted)


# -- batched evaluation ------------------------------------------------------

# exp(-700) ~ 1e-304: probabilities below it are treated as exactly zero
_EXP_FLOOR = -700.0


def cooperative_risk_tensor(ego_pos, ego_sig, ego_sigma0, other_pos, other_sig, other_sigma0):
    """Cooperative collision probabilities for C ego candidates against K agents.

    Args:
        ego_pos: (C, N, 2) candidate positions.
        ego_sig: (C, N) candidate standard deviations.
        ego_sigma0: scalar initial ego standard deviation.
        other_pos: (K, N, 2) predicted agent means.
        other_sig: (K, N) predicted agent standard deviations.
        other_sigma0: (K,) initial standard deviations.

    Returns:
        (C, K, N) array in [0, 1] and the number of clamped entries.
    """
    other_sigma0 = np.asarray(other_sigma0, dtype=float)
    # work in (C, N, K) so the innermost loops run over the K agents
    ex, ey = ego_pos[:, :, 0:1], ego_pos[:, :, 1:2]
    ox, oy = (np.ascontiguousarray(other_pos[:, :, j].T)[None] for j in (0, 1))
    inv_var = (ego_sig * ego_sig)[:, :, None] + (other_sig * other_sig).T[None]
    np.divide(1.0, inv_var, out=inv_var)
    d2 = ex - ox
    d2 *= d2
    dy = ey - oy
    dy *= dy
    d2 += dy
    d2 *= inv_var
    d2 *= -0.5
    # far-apart pairs: flush to an exact zero instead of taking exp's slow underflow path
    negligible = d2 < _EXP_FLOOR
    np.maximum(d2, _EXP_FLOOR, out=d2)
    raw = np.exp(d2, out=d2)
    raw[negligible] = 0.0
    # var_0 / var_i times the cooperative factor
    coef = (ego_sigma0 / ego_sig)[:, :, None] * (other_sigma0[None, :] / other_sig.T)[None]
    coef *= (ego_sigma0 ** 2 + other_sigma0 ** 2)[None, None, :]
    coef *= inv_var
    raw *= coef
    raw = raw.transpose(0, 2, 1)
    return clip_probability(raw)


def static_risk_tensor(ego_pos, ego_sig, obstacles):
    """Static-obstacle probabilities for positions (..., 2) with sigmas (...)."""
    segs = _obstacle_segments(obstacles)
    if len(segs) == 0:
        return np.zeros(np.shape(ego_sig))
    d = point_segment_distance(ego_pos, segs[:, 0], segs[:, 1]).min(axis=-1)
    return 1.0 - erf(d / (ego_sig * np.sqrt(2.0)))


def predictions_to_arrays(predictions: Sequence[GaussianPrediction]):
    """Stack predictions into (K, N, 2), (K, N), (K,) arrays."""
    if not predictions:
        return np.empty((0, 0, 2)), np.empty((0, 0)), np.empty(0)
    pos = np.stack([p.positions for p in predictions])
    sig = np.stack([p.sigmas for p in predictions])
    sig0 = np.array([p.sigma0 for p in predictions])
    return pos, sig, sig0
