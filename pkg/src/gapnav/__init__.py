"""Gap planner for crowd navigation, with short-horizon baselines and a benchmark harness."""

from .candidates import CandidateTrajectory, PgpConfig, build_paths, path_to_trajectory, pgp_goal
from .errors import ConfigError, ContractViolation, PlacementError
from .planner import EvaluationResult, PlannerConfig, SubgoalSpec, expected_utility, plan, step_utility
from .prediction import AgentState, SigmaGrowthParams, predict_all, predict_constant_velocity, sigma_schedule
from .risk import (
    GaussianPrediction,
    RiskParams,
    StaticObstacle,
    SurvivalProfile,
    cooperative_collision_prob,
    cooperative_factor,
    pairwise_collision_prob,
    static_collision_prob,
    survival_analysis,
)

__version__ = "0.1.0"
