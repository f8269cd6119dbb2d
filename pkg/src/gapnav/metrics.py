"""Success and social metrics for one run, and paired significance tests.

Rates only count ticks in which the ego is moving: a standing agent is not
held responsible for contacts. All distances are centre to centre.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import norm

from .baselines.social_force import interaction_on
from .errors import ContractViolation

EXACT_MAX_N = 25


@dataclass
class MetricsRecord:
    time_to_target: float
    path_length: float
    collision_rate_moving: float
    svr_moving: float
    avg_social_force: float
    outcome: str

    def as_dict(self):
        return asdict(self)


def _nearest_distance(record):
    pos = record.positions
    if pos.shape[1] < 2:
        return np.full(len(pos), np.inf)
    d = pos[:, 1:, :] - pos[:, :1, :]
    return np.hypot(d[..., 0], d[..., 1]).min(axis=1)


def _moving(record):
    v = record.velocities[:, 0, :]
    return np.hypot(v[:, 0], v[:, 1]) > record.config.moving_threshold


def _rate_while_moving(flags, moving):
    n = int(moving.sum())
    if n == 0:
        return 0.0
    return float(np.count_nonzero(flags & moving)) / n


def success_metrics(record):
    """(time to target, path length, collision rate while moving)."""
    cfg = record.config
    if record.arrival_tick is not None:
        time = record.arrival_tick * cfg.sim_dt
    else:
        time = cfg.timeout
    ego = record.positions[:, 0, :]
    steps = np.diff(ego, axis=0)
    path = float(np.hypot(steps[:, 0], steps[:, 1]).sum())
    coll = _rate_while_moving(_nearest_distance(record) < 2.0 * cfg.agent_radius, _moving(record))
    return float(time), path, coll


def svr(record, threshold=1.0):
    """Fraction of moving ticks with another agent strictly closer than ``threshold``."""
    return _rate_while_moving(_nearest_distance(record) < threshold, _moving(record))


def avg_social_force(record, params=None):
    """Mean over all ticks of |sum of pairwise repulsive forces on the ego|."""
    params = params or record.config.sf
    pos, vel = record.positions, record.velocities
    if pos.shape[1] < 2 or len(pos) == 0:
        return 0.0
    total = 0.0
    for k in range(len(pos)):
        f = interaction_on(pos[k, 0], vel[k, 0], pos[k, 1:], vel[k, 1:], params).sum(axis=0)
        total += math.hypot(f[0], f[1])
    return total / len(pos)


def compute_metrics(record):
    time, path, coll = success_metrics(record)
    return MetricsRecord(
        time_to_target=time,
        path_length=path,
        collision_rate_moving=coll,
        svr_moving=svr(record, record.config.svr_threshold),
        avg_social_force=avg_social_force(record),
        outcome=record.outcome,
    )


# -- paired significance -------------------------------------------------------


def midranks(values):
    """Ranks 1..n of ``values``, ties receiving the mean of their positions."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_signed_rank_counts(doubled_ranks):
    """Number of sign assignments yielding each value of 2*W+ (dynamic programme)."""
    total = int(sum(doubled_ranks))
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    return counts


def wilcoxon_paired(sample_a, sample_b):
    """Two-sided Wilcoxon signed-rank p-value for paired samples.

    Zero differences are dropped and tied |differences| share midranks. With
    at most 25 non-zero pairs the null distribution is enumerated exactly over
    all sign assignments; above that a normal approximation with tie
    correction is used.
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractViolation("samples must be 1-D and of equal length")
    if len(a) < 5:
        raise ContractViolation("need at least 5 pairs")
    d = b - a
    d = d[d != 0.0]
    n = len(d)
    if n == 0:
        return 1.0
    ranks = midranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    if n <= EXACT_MAX_N:
        doubled = np.rint(2.0 * ranks).astype(int)
        counts = _exact_signed_rank_counts(doubled)
        total = 2 ** n
        w2 = int(round(2.0 * w_plus))
        lower = sum(counts[: w2 + 1])
        upper = sum(counts[w2:])
        p = 2.0 * min(lower, upper) / total
        return float(min(1.0, p))
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - (tie_counts ** 3 - tie_counts).sum() / 48.0
    if var <= 0:
        return 1.0
    z = (w_plus - mean) / math.sqrt(var)
    return float(min(1.0, 2.0 * norm.sf(abs(z))))
