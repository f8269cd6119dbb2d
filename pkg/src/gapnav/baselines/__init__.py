"""Short-horizon collision-avoidance controllers: predictive DWA, ORCA and Social Forces."""

from .common import VelocityCommand
from .dwa import DwaParams, dwa_step
from .orca import OrcaParams, orca_step
from .social_force import SfParams, sf_step

__all__ = [
    "VelocityCommand",
    "DwaParams",
    "OrcaParams",
    "SfParams",
    "dwa_step",
    "orca_step",
    "sf_step",
]
