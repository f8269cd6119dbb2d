"""Constant-velocity predictions with speed-dependent Gaussian uncertainty."""

from dataclasses import dataclass
from typing import Hashable, NamedTuple, Optional

import numpy as np

from .errors import ContractViolation
from .geometry import wrap_angle
from .risk import GaussianPrediction


@dataclass
class AgentState:
    id: Hashable
    position: np.ndarray
    velocity: np.ndarray
    heading: float = 0.0
    radius: float = 0.3
    goal: Optional[np.ndarray] = None
    group_id: Optional[Hashable] = None

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).reshape(2)
        self.velocity = np.asarray(self.velocity, dtype=float).reshape(2)
        if self.goal is not None:
            self.goal = np.asarray(self.goal, dtype=float).reshape(2)
        self.heading = wrap_angle(self.heading)
        if self.radius <= 0.0:
            raise ContractViolation("agent radius must be positive")

    @property
    def speed(self):
        return float(np.hypot(*self.velocity))


@dataclass(frozen=True)
class SigmaGrowthParams:
    """Growth of the positional standard deviation over the horizon.

    ``per_step_gain`` is metres of sigma added per prediction step per m/s.
    """

    sigma0: float = 0.1666
    cap_multiplier: float = 3.0
    cap_speed_gain: float = 0.4
    per_step_gain: float = 0.015

    def __post_init__(self):
        if self.sigma0 <= 0.0:
            raise ContractViolation("sigma0 must be positive")
        if self.cap_multiplier < 1.0:
            raise ContractViolation("cap_multiplier must be >= 1")
        if self.cap_speed_gain < 0.0 or self.per_step_gain < 0.0:
            raise ContractViolation("gains must be non-negative")


def predict_constant_velocity(state, horizon_steps, dt):
    if horizon_steps < 1 or dt <= 0.0:
        raise ContractViolation("horizon_steps must be >= 1 and dt > 0")
    t = np.arange(horizon_steps) * dt
    return state.position[None, :] + t[:, None] * state.velocity[None, :]


def sigma_schedule(speed_profile, params):
    """Standard deviations for one or many speed profiles (last axis = steps).

    sigma_0 is fixed; each later step adds ``per_step_gain * v_i`` until the
    speed-dependent cap is reached. Since increments are non-negative the
    recurrence equals a capped cumulative sum, which is what is computed.
    """
    v = np.asarray(speed_profile, dtype=float)
    if np.any(v < 0.0):
        raise ContractViolation("speeds must be non-negative")
    s0 = params.sigma0
    cap = np.minimum(params.cap_multiplier * s0, s0 + params.cap_speed_gain * v.max(axis=-1))
    growth = np.cumsum(params.per_step_gain * v[..., 1:], axis=-1)
    growth = np.concatenate([np.zeros(v.shape[:-1] + (1,)), growth], axis=-1)
    return np.minimum(np.asarray(cap)[..., None], s0 + growth)


def predict_arrays(positions, velocities, horizon_steps, dt, params):
    """Batched constant-velocity prediction for K agents.

    Returns means (K, N, 2) and sigmas (K, N). Each agent's observed speed is
    held constant over the horizon.
    """
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    velocities = np.asarray(velocities, dtype=float).reshape(-1, 2)
    t = np.arange(horizon_steps) * dt
    means = positions[:, None, :] + t[None, :, None] * velocities[:, None, :]
    speeds = np.hypot(velocities[:, 0], velocities[:, 1])
    s0 = params.sigma0
    cap = np.minimum(params.cap_multiplier * s0, s0 + params.cap_speed_gain * speeds)
    steps = np.arange(horizon_steps)
    sig = np.minimum(cap[:, None], s0 + params.per_step_gain * speeds[:, None] * steps[None, :])
    return means, sig


def predict_all(states, horizon_steps, dt, params):
    out = []
    for state in states:
        positions = predict_constant_velocity(state, horizon_steps, dt)
        sigmas = sigma_schedule(np.full(horizon_steps, state.speed), params)
        out.append(
            GaussianPrediction(
                positions=positions, sigmas=sigmas, sigma0=params.sigma0, dt=dt, agent_id=state.id
            )
        )
    return out


class CrowdArrays(NamedTuple):
    """Positions (K, 2) and velocities (K, 2) of the other agents."""

    positions: np.ndarray
    velocities: np.ndarray


def crowd_arrays(others):
    if isinstance(others, CrowdArrays):
        return others
    others = list(others)
    if not others:
        return CrowdArrays(np.empty((0, 2)), np.empty((0, 2)))
    return CrowdArrays(
        np.array([o.position for o in others], dtype=float),
        np.array([o.velocity for o in others], dtype=float),
    )
