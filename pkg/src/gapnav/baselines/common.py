from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass
class VelocityCommand:
    """Controller output.

    Unicycle controllers (DWA) fill ``linear_speed`` and ``yaw_rate``;
    holonomic ones (ORCA, SF) fill ``velocity`` and its norm.
    """

    linear_speed: float
    yaw_rate: Optional[float] = None
    velocity: Optional[np.ndarray] = None


def cap_speed(v, v_max):
    speed = float(np.hypot(v[0], v[1]))
    if speed > v_max:
        return v * (v_max / speed)
    return np.asarray(v, dtype=float)
