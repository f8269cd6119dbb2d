"""JSON loading of scenario configs and sweep specs.

A scenario file is one JSON object whose keys are ``ScenarioConfig`` fields.
Nested parameter blocks (``dwa``, ``orca``, ``sf``, ``planner`` with its own
``pgp``, ``sigma``, ``risk`` blocks) take the fields of the matching
dataclass; anything omitted keeps its default. Angles in ``planner.pgp``
are given in degrees under ``fan_angles_deg``. A sweep spec adds
``densities``, ``seeds_per_cell``, ``planners``, ``master_seed`` and an
optional ``scenario`` block applied to every cell. See docs/formats.md.
"""

import dataclasses
import json
import math
import re
from dataclasses import dataclass, field

from .baselines import DwaParams, OrcaParams, SfParams
from .candidates import PgpConfig
from .errors import ConfigError, ContractViolation
from .planner import PlannerConfig, SubgoalSpec
from .prediction import SigmaGrowthParams
from .risk import RiskParams
from .sim import PLANNERS, ScenarioConfig

DEFAULT_DENSITIES = (0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)

_NESTED = {
    ScenarioConfig: {"dwa": DwaParams, "orca": OrcaParams, "sf": SfParams, "planner": PlannerConfig},
    PlannerConfig: {"pgp": PgpConfig, "sigma": SigmaGrowthParams, "risk": RiskParams, "subgoal": SubgoalSpec},
}


@dataclass
class SweepSpec:
    densities: tuple = DEFAULT_DENSITIES
    seeds_per_cell: int = 100
    planners: tuple = PLANNERS
    master_seed: int = 0
    scenario: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.densities:
            raise ConfigError("at least one density is required", field="densities")
        for d in self.densities:
            if not 0.0 < d <= 1.5:
                raise ConfigError(f"density {d} outside (0, 1.5]", field="densities")
        if self.seeds_per_cell < 1:
            raise ConfigError("must be at least 1", field="seeds_per_cell")
        for p in self.planners:
            if p not in PLANNERS:
                raise ConfigError(f"unknown planner '{p}'", field="planners")
        if len(set(self.planners)) != len(self.planners):
            raise ConfigError("planners must be unique", field="planners")


class _Source:
    """Raw text of a config file, used to point diagnostics at a line."""

    def __init__(self, text):
        self.lines = text.splitlines()

    def line_of(self, key):
        pattern = re.compile(r'"' + re.escape(key) + r'"\s*:')
        for i, line in enumerate(self.lines, start=1):
            if pattern.search(line):
                return i
        return None


def _parse_json(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object", line=1)
    return data


def _coerce(value, default, name, source):
    def fail(expected):
        raise ConfigError(
            f"expected {expected}, got {type(value).__name__}", field=name, line=source.line_of(name.split(".")[-1])
        )

    if isinstance(default, bool):
        if not isinstance(value, bool):
            fail("a boolean")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            fail("an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            fail("a number")
        if not math.isfinite(value):
            fail("a finite number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            fail("a string")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, list):
            fail("a list")
        return tuple(value)
    return value


def _build(cls, data, prefix, source):
    if not isinstance(data, dict):
        raise ConfigError("expected an object", field=prefix or None, line=source.line_of(prefix.split(".")[-1]))
    data = dict(data)
    if cls is PgpConfig and "fan_angles_deg" in data:
        angles = data.pop("fan_angles_deg")
        if not isinstance(angles, list) or not all(isinstance(a, (int, float)) for a in angles):
            raise ConfigError("expected a list of numbers", field=f"{prefix}.fan_angles_deg",
                              line=source.line_of("fan_angles_deg"))
        data["fan_angles"] = [math.radians(a) for a in angles]
    defaults = cls()
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        name = f"{prefix}.{key}" if prefix else key
        if key not in names:
            raise ConfigError("unknown field", field=name, line=source.line_of(key))
        nested = _NESTED.get(cls, {}).get(key)
        if nested is not None:
            kwargs[key] = _build(nested, value, name, source)
        elif key == "obstacles":
            kwargs[key] = _obstacles(value, name, source)
        else:
            kwargs[key] = _coerce(value, getattr(defaults, key), name, source)
    try:
        return cls(**kwargs)
    except (ContractViolation, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), field=prefix or None, line=source.line_of(prefix.split(".")[-1])) from None


def _obstacles(value, name, source):
    if value is None:
        return None
    ok = isinstance(value, list) and all(
        isinstance(seg, list) and len(seg) == 2
        and all(isinstance(p, list) and len(p) == 2 and all(isinstance(c, (int, float)) for c in p) for p in seg)
        for seg in value
    )
    if not ok:
        raise ConfigError("expected a list of [[x1, y1], [x2, y2]] segments", field=name, line=source.line_of("obstacles"))
    return [tuple(tuple(float(c) for c in p) for p in seg) for seg in value]


def scenario_from_dict(data, text=""):
    return _build(ScenarioConfig, data, "", _Source(text))


def load_scenario(path):
    """Read a scenario JSON file into a ``ScenarioConfig``; raises ConfigError."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}") from None
    return scenario_from_dict(_parse_json(text), text)


def scenario_to_dict(config):
    """Plain-JSON view of a config (angles in degrees), the inverse of ``scenario_from_dict``."""
    out = {}
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if dataclasses.is_dataclass(value):
            value = _params_to_dict(value)
        elif isinstance(value, tuple):
            value = list(value)
        out[f.name] = value
    return out


def _params_to_dict(obj):
    out = {}
    for f in dataclasses.fields(obj):
        value = getattr(obj, f.name)
        if dataclasses.is_dataclass(value):
            out[f.name] = _params_to_dict(value)
        elif isinstance(obj, PgpConfig) and f.name == "fan_angles":
            out["fan_angles_deg"] = [round(math.degrees(a), 9) for a in value]
        elif isinstance(value, tuple):
            out[f.name] = list(value)
        else:
            out[f.name] = value
    return out


def load_sweep_spec(path):
    """Read a sweep spec JSON file; the ``scenario`` block is validated eagerly."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read sweep spec: {exc.strerror}") from None
    data = _parse_json(text)
    source = _Source(text)
    allowed = {f.name for f in dataclasses.fields(SweepSpec)}
    kwargs = {}
    for key, value in data.items():
        if key not in allowed:
            raise ConfigError("unknown field", field=key, line=source.line_of(key))
        if key == "scenario":
            if not isinstance(value, dict):
                raise ConfigError("expected an object", field=key, line=source.line_of(key))
            for forbidden in ("density", "seed", "ego_planner"):
                if forbidden in value:
                    raise ConfigError("set by the sweep, not the scenario block",
                                      field=f"scenario.{forbidden}", line=source.line_of(forbidden))
            _build(ScenarioConfig, value, "scenario", source)
            kwargs[key] = value
        elif key in ("densities", "planners"):
            if not isinstance(value, list):
                raise ConfigError("expected a list", field=key, line=source.line_of(key))
            if key == "densities" and not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
                raise ConfigError("expected a list of numbers", field=key, line=source.line_of(key))
            if key == "planners" and not all(isinstance(v, str) for v in value):
                raise ConfigError("expected a list of strings", field=key, line=source.line_of(key))
            kwargs[key] = tuple(float(v) for v in value) if key == "densities" else tuple(v.lower() for v in value)
        else:
            kwargs[key] = _coerce(value, getattr(SweepSpec(), key), key, source)
    try:
        return SweepSpec(**kwargs)
    except ConfigError as exc:
        if exc.line is None and exc.field is not None:
            exc.line = source.line_of(exc.field)
        raise


def cell_config(spec, density, seed, planner):
    """Scenario config for one sweep cell."""
    data = dict(spec.scenario)
    data.update(density=density, seed=seed, ego_planner=planner)
    return scenario_from_dict(data)


__all__ = [
    "DEFAULT_DENSITIES",
    "SweepSpec",
    "cell_config",
    "load_scenario",
    "load_sweep_spec",
    "scenario_from_dict",
    "scenario_to_dict",
]
