"""Square-stage crowd simulation with one planner-driven ego agent.

Other pedestrians walk in small groups under the Social Forces model, each
group heading for a shared goal area and drawing a new one as soon as any
member arrives. The ego agent crosses the stage from the middle of the left
edge to the middle of the right edge, driven by DWA, ORCA or SF, optionally
steered by the gap planner's subgoal.

Randomness comes from a Philox counter-based generator seeded with the
scenario seed, so a (config, seed) pair always reproduces the same run.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .baselines import DwaParams, OrcaParams, SfParams, dwa_step, orca_step, sf_step
from .baselines.social_force import (
    desired_force,
    group_forces,
    interaction_on,
    obstacle_forces,
    social_forces,
)
from .errors import ContractViolation, PlacementError
from .planner import PlannerConfig, SubgoalSpec, plan
from .prediction import AgentState, CrowdArrays
from .risk import StaticObstacle

CCA_KINDS = ("dwa", "orca", "sf")
PLANNERS = ("dwa", "orca", "sf", "pgp+dwa", "pgp+orca", "pgp+sf")


def parse_planner(name):
    """'pgp+orca' -> ('orca', True)."""
    name = name.lower()
    if name not in PLANNERS:
        raise ContractViolation(f"unknown planner '{name}', expected one of {PLANNERS}")
    use_pgp = name.startswith("pgp+")
    return name.split("+")[-1], use_pgp


@dataclass
class ScenarioConfig:
    density: float = 0.0
    seed: int = 0
    ego_planner: str = "sf"
    stage_side: float = 10.0
    max_group_size: int = 4
    desired_speed: float = 1.0
    crowd_max_speed_factor: float = 1.3
    sim_dt: float = 0.1
    timeout: float = 60.0
    agent_radius: float = 0.3
    arrival_radius: float = 0.5
    moving_threshold: float = 0.1
    svr_threshold: float = 1.0
    pgp_period: float = 0.25
    spawn_jitter: float = 0.5
    goal_jitter: float = 0.3
    obstacles: Optional[list] = None  # list of ((x1, y1), (x2, y2)) segments
    # optionally hand the top and bottom stage edges to the gap planner as walls
    planner_sees_stage_walls: bool = False
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    dwa: DwaParams = field(default_factory=DwaParams)
    orca: OrcaParams = field(default_factory=OrcaParams)
    sf: SfParams = field(default_factory=SfParams)

    def __post_init__(self):
        parse_planner(self.ego_planner)
        if self.density < 0:
            raise ContractViolation("density must be non-negative")
        if self.sim_dt <= 0 or self.timeout <= 0:
            raise ContractViolation("sim_dt and timeout must be positive")
        if self.max_group_size < 1:
            raise ContractViolation("max_group_size must be >= 1")

    @property
    def n_others(self):
        return int(round(self.density * self.stage_side ** 2))

    @property
    def ego_start(self):
        return np.array([0.0, self.stage_side / 2.0])

    @property
    def ego_goal(self):
        return np.array([self.stage_side, self.stage_side / 2.0])

    def segments(self):
        if not self.obstacles:
            return np.empty((0, 2, 2))
        return np.asarray(self.obstacles, dtype=float).reshape(-1, 2, 2)

    def planner_segments(self):
        """Static segments handed to the gap planner: configured obstacles plus stage walls."""
        segs = self.segments()
        if self.planner_sees_stage_walls:
            side = self.stage_side
            walls = np.array([[[0.0, 0.0], [side, 0.0]], [[0.0, side], [side, side]]])
            segs = np.concatenate([segs, walls])
        return segs

    def planner_config(self):
        """Gap-planner configuration with the subgoal distance of the active controller."""
        kind, _ = parse_planner(self.ego_planner)
        horizon = {"dwa": self.dwa.t_plan, "orca": self.orca.t_plan, "sf": self.sf.t_plan}[kind]
        v_max = {"dwa": self.dwa.v_max, "orca": self.orca.v_max, "sf": self.sf.v_max}[kind]
        return replace(self.planner, subgoal=SubgoalSpec(cca_v_max=v_max, cca_horizon=horizon))


@dataclass
class World:
    """Mutable simulation state. Row 0 of every array is the ego agent."""

    time: float
    tick: int
    positions: np.ndarray
    velocities: np.ndarray
    goals: np.ndarray
    radii: np.ndarray
    group_of: np.ndarray  # group index per agent, -1 for the ego
    groups: list  # member index arrays
    ego_heading: float
    ego_yaw_rate: float = 0.0
    rng: Optional[np.random.Generator] = field(default=None, repr=False)

    @property
    def n_agents(self):
        return len(self.positions)

    def ego_state(self):
        return AgentState(
            id=0, position=self.positions[0].copy(), velocity=self.velocities[0].copy(),
            heading=self.ego_heading, radius=float(self.radii[0]), goal=self.goals[0].copy(),
        )

    def crowd(self):
        return CrowdArrays(self.positions[1:], self.velocities[1:])

    def copy(self):
        return replace(
            self, positions=self.positions.copy(), velocities=self.velocities.copy(),
            goals=self.goals.copy(), radii=self.radii.copy(), group_of=self.group_of.copy(),
            groups=[g.copy() for g in self.groups],
        )


@dataclass
class RunRecord:
    """Per-tick trace of one run; row k holds the state at time ``times[k]``."""

    config: ScenarioConfig
    times: np.ndarray
    positions: np.ndarray  # (T, M, 2)
    velocities: np.ndarray  # (T, M, 2)
    subgoals: np.ndarray  # (T, 2), NaN without gap planner
    moving: np.ndarray
    colliding: np.ndarray
    space_violating: np.ndarray
    ego_force: np.ndarray
    outcome: str  # "reached" | "timeout"
    arrival_tick: Optional[int]
    metrics: Optional[object] = None

    @property
    def n_ticks(self):
        return len(self.times)


def make_rng(seed):
    return np.random.Generator(np.random.Philox(int(seed) & (2 ** 64 - 1)))


def _group_sizes(n, max_size, rng):
    sizes = []
    while sum(sizes) < n:
        sizes.append(int(rng.integers(1, max_size + 1)))
    if sizes:
        sizes[-1] -= sum(sizes) - n
    return sizes


def _sample_goal_center(config, rng, margin):
    return rng.uniform(margin, config.stage_side - margin, size=2)


def _member_goals(center, k, config, rng, margin):
    pts = center[None, :] + rng.normal(0.0, config.goal_jitter, size=(k, 2))
    return np.clip(pts, margin, config.stage_side - margin)


def spawn_scenario(config):
    """Initial world: grouped pedestrians at rest plus the ego at the left edge."""
    rng = make_rng(config.seed)
    side = config.stage_side
    r = config.agent_radius
    min_sq = (2.0 * r) ** 2
    margin = r

    placed = [config.ego_start]
    goals = [config.ego_goal]
    group_of = [-1]
    groups = []
    for g, size in enumerate(_group_sizes(config.n_others, config.max_group_size, rng)):
        center = rng.uniform(margin, side - margin, size=2)
        goal_center = _sample_goal_center(config, rng, margin)
        members = []
        for _ in range(size):
            for attempt in range(2000):
                if attempt < 100:
                    cand = center + rng.normal(0.0, config.spawn_jitter, size=2)
                else:
                    cand = rng.uniform(margin, side - margin, size=2)
                cand = np.clip(cand, margin, side - margin)
                arr = np.asarray(placed)
                if np.min(np.sum((arr - cand) ** 2, axis=1)) >= min_sq:
                    break
            else:
                raise PlacementError(
                    f"seed {config.seed}: could not place agent {len(placed)} at density {config.density}"
                )
            members.append(len(placed))
            placed.append(cand)
            group_of.append(g)
        goals.extend(_member_goals(goal_center, size, config, rng, margin))
        groups.append(np.array(members, dtype=int))

    m = len(placed)
    return World(
        time=0.0,
        tick=0,
        positions=np.array(placed, dtype=float),
        velocities=np.zeros((m, 2)),
        goals=np.array(goals, dtype=float).reshape(m, 2),
        radii=np.full(m, r),
        group_of=np.array(group_of, dtype=int),
        groups=groups,
        ego_heading=0.0,
        rng=rng,
    )


def crowd_accelerations(world, config):
    """Social-Forces acceleration of every non-ego agent (the ego is a force source only)."""
    params = config.sf
    others = slice(1, None)
    pos, vel = world.positions, world.velocities
    force = social_forces(pos, vel, params)[others]
    force += desired_force(pos[others], vel[others], world.goals[others], config.desired_speed, params)
    if world.groups:
        force += group_forces(pos, world.goals, world.groups, params)[others]
    segs = config.segments()
    if len(segs):
        force += obstacle_forces(pos[others], world.radii[others], segs, params)
    return force


def _apply_ego_command(world, command, kind, dt):
    if kind == "dwa":
        v, w = command.linear_speed, command.yaw_rate
        psi = world.ego_heading
        if abs(w) < 1e-9:
            dx, dy = v * dt * math.cos(psi), v * dt * math.sin(psi)
        else:
            dx = v / w * (math.sin(psi + w * dt) - math.sin(psi))
            dy = -v / w * (math.cos(psi + w * dt) - math.cos(psi))
        world.ego_heading = math.remainder(psi + w * dt, 2.0 * math.pi)
        world.ego_yaw_rate = w
        world.positions[0] += (dx, dy)
        world.velocities[0] = (v * math.cos(world.ego_heading), v * math.sin(world.ego_heading))
    else:
        vel = np.asarray(command.velocity, dtype=float)
        world.positions[0] += vel * dt
        world.velocities[0] = vel
        if math.hypot(vel[0], vel[1]) > 1e-6:
            world.ego_heading = math.atan2(vel[1], vel[0])


def step_world(world, dt, config, ego_command=None, kind=None):
    """Advance the world by ``dt`` in place and return it.

    Pedestrians take one Social-Forces step; the ego executes ``ego_command``
    (unicycle for DWA, holonomic otherwise). Positions are clamped to the
    stage and groups with an arrived member draw a new goal.
    """
    if world.n_agents > 1:
        acc = crowd_accelerations(world, config)
        v = world.velocities[1:] + dt * acc
        speed = np.hypot(v[:, 0], v[:, 1])
        vmax = config.desired_speed * config.crowd_max_speed_factor
        scale = np.where(speed > vmax, vmax / np.maximum(speed, 1e-12), 1.0)
        v = v * scale[:, None]
        world.velocities[1:] = v
        world.positions[1:] += v * dt
    if ego_command is not None:
        _apply_ego_command(world, ego_command, kind, dt)
    clipped = np.clip(world.positions, 0.0, config.stage_side)
    # an agent pressed against the stage edge does not keep moving through it
    world.velocities[clipped != world.positions] = 0.0
    world.positions[:] = clipped
    world.time = (world.tick + 1) * dt
    world.tick += 1
    _resample_goals(world, config)
    return world


def _resample_goals(world, config):
    if world.n_agents <= 1:
        return
    d = world.positions[1:] - world.goals[1:]
    arrived = np.flatnonzero(np.hypot(d[:, 0], d[:, 1]) < config.arrival_radius) + 1
    if len(arrived) == 0:
        return
    margin = config.agent_radius
    for g in sorted(set(world.group_of[arrived].tolist())):
        members = world.groups[g]
        center = _sample_goal_center(config, world.rng, margin)
        world.goals[members] = _member_goals(center, len(members), config, world.rng, margin)


def ego_social_force(positions, velocities, params, ego=0):
    """Magnitude of the summed pairwise interaction force acting on the ego."""
    if len(positions) < 2:
        return 0.0
    mask = np.ones(len(positions), dtype=bool)
    mask[ego] = False
    f = interaction_on(positions[ego], velocities[ego], positions[mask], velocities[mask], params)
    return float(np.hypot(*f.sum(axis=0)))


def _plan_ticks(tick, dt, period):
    """True when the gap planner is due (fixed-rate schedule on integer microseconds)."""
    if tick == 0:
        return True
    dt_us = int(round(dt * 1e6))
    period_us = int(round(period * 1e6))
    return (tick * dt_us) // period_us != ((tick - 1) * dt_us) // period_us


def run_scenario(config, world=None):
    """Simulate one seeded scenario until the ego arrives or the timeout hits."""
    kind, use_pgp = parse_planner(config.ego_planner)
    world = world or spawn_scenario(config)
    dt = config.sim_dt
    max_ticks = int(round(config.timeout / dt))
    map_goal = config.ego_goal
    segs = config.segments()
    planner_segs = config.planner_segments()
    obstacles = [StaticObstacle(planner_segs)] if len(planner_segs) else None
    planner_config = config.planner_config()

    times, pos_hist, vel_hist, subgoal_hist, force_hist = [], [], [], [], []
    subgoal = None
    arrival_tick = None

    def record():
        times.append(world.time)
        pos_hist.append(world.positions.copy())
        vel_hist.append(world.velocities.copy())
        subgoal_hist.append(subgoal if subgoal is not None else (np.nan, np.nan))
        force_hist.append(ego_social_force(world.positions, world.velocities, config.sf))

    for tick in range(max_ticks + 1):
        record()
        if np.hypot(*(world.positions[0] - map_goal)) < config.arrival_radius:
            arrival_tick = tick
            break
        if tick == max_ticks:
            break
        ego = world.ego_state()
        crowd = world.crowd()
        if use_pgp and _plan_ticks(tick, dt, config.pgp_period):
            subgoal = plan(ego, crowd, obstacles, map_goal, planner_config).subgoal
        target = subgoal if use_pgp else map_goal
        if kind == "dwa":
            cmd = dwa_step(ego, crowd, target, config.dwa, yaw_rate=world.ego_yaw_rate,
                           others_radius=world.radii[1:])
        elif kind == "orca":
            cmd = orca_step(ego, crowd, target, config.orca, others_radius=world.radii[1:])
        else:
            cmd = sf_step(ego, crowd, target, replace(config.sf, dt=dt), segments=segs)
        step_world(world, dt, config, cmd, kind)

    positions = np.array(pos_hist)
    velocities = np.array(vel_hist)
    ego_speed = np.hypot(velocities[:, 0, 0], velocities[:, 0, 1])
    if positions.shape[1] > 1:
        d = positions[:, 1:, :] - positions[:, :1, :]
        nearest = np.hypot(d[..., 0], d[..., 1]).min(axis=1)
    else:
        nearest = np.full(len(positions), np.inf)
    return RunRecord(
        config=config,
        times=np.array(times),
        positions=positions,
        velocities=velocities,
        subgoals=np.array(subgoal_hist, dtype=float).reshape(-1, 2),
        moving=ego_speed > config.moving_threshold,
        colliding=nearest < 2.0 * config.agent_radius,
        space_violating=nearest < config.svr_threshold,
        ego_force=np.array(force_hist),
        outcome="reached" if arrival_tick is not None else "timeout",
        arrival_tick=arrival_tick,
    )


TRACE_SCHEMA_VERSION = 1


def write_trace(record, path):
    """Write a run trace as CSV.

    Columns: ``time``, ``moving``, ``colliding``, ``space_violating``,
    ``ego_force``, ``subgoal_x``, ``subgoal_y``, then ``x{i}``, ``y{i}``,
    ``vx{i}``, ``vy{i}`` for every agent i (0 is the ego). The first line is a
    ``# schema=<version>`` comment.
    """
    m = record.positions.shape[1]
    header = ["time", "moving", "colliding", "space_violating", "ego_force", "subgoal_x", "subgoal_y"]
    for i in range(m):
        header += [f"x{i}", f"y{i}", f"vx{i}", f"vy{i}"]
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={TRACE_SCHEMA_VERSION}\n")
        fh.write(",".join(header) + "\n")
        for k in range(record.n_ticks):
            row = [
                repr(float(record.times[k])),
                str(int(record.moving[k])),
                str(int(record.colliding[k])),
                str(int(record.space_violating[k])),
                repr(float(record.ego_force[k])),
                repr(float(record.subgoals[k, 0])),
                repr(float(record.subgoals[k, 1])),
            ]
            state = np.concatenate([record.positions[k], record.velocities[k]], axis=1).ravel()
            row += [repr(float(x)) for x in state]
            fh.write(",".join(row) + "\n")
