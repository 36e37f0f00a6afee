"""Scenario files: the JSON description of a workcell and its procedure.

Layout (version 1)::

    {
      "version": 1,
      "home": [6 floats],
      "velocity_limits": [6 floats],
      "joint_limits": {"lower": [6], "upper": [6]},
      "feasibility": {"max_joint_jump": rad} | null,
      "twist_rate": deg/s,
      "pump": {PumpConfig fields},
      "twist_profiles": {name: {"total_angle", "total_dx", "max_angle_increment", "stir_bar"}},
      "tasks": [{"name", "layers": [{"label", "candidates": [[6], ...], "pose"?}]}],
      "procedure": [{"type": "LiquidTransfer" | "Stir" | "Pour" | "PlaceOnRack"
                              | "Reconfigure" | "Analyze", ...}]
    }

``Pour`` steps refer to a named twist profile. Every field except
``version``, ``home`` and ``tasks`` has a default.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional, Union

from .kinematics import CartesianPose, JointConfig, JointLimits, VelocityLimits
from .orchestrator import (
    DEFAULT_TWIST_RATE,
    Analyze,
    LiquidTransfer,
    PlaceOnRack,
    Pour,
    ProcedureStep,
    Reconfigure,
    Stir,
)
from .pump import PumpConfig
from .sequencer import SequenceInstance, TargetLayer, TaskSpec
from .skills import TwistProfile, UprightConstraint

VERSION = 1


class ScenarioError(ValueError):
    """Malformed scenario; ``line``/``column`` are set for JSON syntax errors."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class MaxJointJump:
    """Edge predicate forbidding moves where any joint travels more than ``limit`` rad."""

    limit: float

    def __call__(self, a: JointConfig, b: JointConfig) -> bool:
        return all(abs(x - y) <= self.limit for x, y in zip(a.q, b.q))


@dataclass(frozen=True)
class Scenario:
    home: JointConfig
    tasks: tuple[TaskSpec, ...]
    velocity_limits: VelocityLimits = field(default_factory=VelocityLimits)
    joint_limits: JointLimits = field(default_factory=JointLimits)
    pump: PumpConfig = field(default_factory=PumpConfig)
    procedure: tuple[ProcedureStep, ...] = ()
    twist_profiles: tuple[tuple[str, TwistProfile], ...] = ()
    feasibility: Optional[MaxJointJump] = None
    twist_rate: float = DEFAULT_TWIST_RATE
    version: int = VERSION

    def instance(self) -> SequenceInstance:
        return SequenceInstance(self.home, self.tasks, self.velocity_limits,
                                self.feasibility, self.joint_limits)

    def profile(self, name: str) -> TwistProfile:
        return dict(self.twist_profiles)[name]


# -- reading ----------------------------------------------------------------

def _need(obj: dict, key: str, path: str) -> Any:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{path} must be an object")
    if key not in obj:
        raise ScenarioError(f"{path}.{key} is missing")
    return obj[key]


def _parse_pose(raw, path: str) -> Optional[CartesianPose]:
    if raw is None:
        return None
    return CartesianPose(tuple(_need(raw, "position", path)), tuple(_need(raw, "orientation", path)))


def _parse_tasks(raw, path: str = "tasks") -> tuple[TaskSpec, ...]:
    if not isinstance(raw, list) or not raw:
        raise ScenarioError(f"{path} must be a non-empty list")
    tasks = []
    for t, traw in enumerate(raw):
        tpath = f"{path}[{t}]"
        layers = []
        for l, lraw in enumerate(_need(traw, "layers", tpath)):
            lpath = f"{tpath}.layers[{l}]"
            cands = [JointConfig(c) for c in _need(lraw, "candidates", lpath)]
            layers.append(TargetLayer(str(_need(lraw, "label", lpath)), tuple(cands),
                                      _parse_pose(lraw.get("pose"), f"{lpath}.pose")))
        tasks.append(TaskSpec(str(_need(traw, "name", tpath)), tuple(layers)))
    names = [t.name for t in tasks]
    if len(set(names)) != len(names):
        raise ScenarioError(f"{path}: task names must be unique")
    return tuple(tasks)


def _parse_profile(raw, path: str) -> TwistProfile:
    return TwistProfile(
        float(_need(raw, "total_angle", path)),
        float(_need(raw, "total_dx", path)),
        float(raw.get("max_angle_increment", 12.2)),
        bool(raw.get("stir_bar", False)),
    )


_STEP_TYPES = {cls.__name__: cls for cls in (LiquidTransfer, Stir, Pour, PlaceOnRack, Reconfigure, Analyze)}


def _parse_step(raw, path: str, profiles: dict[str, TwistProfile]) -> ProcedureStep:
    kind = _need(raw, "type", path)
    cls = _STEP_TYPES.get(kind)
    if cls is None:
        raise ScenarioError(f"{path}.type: unknown step type {kind!r}")
    kwargs = {k: v for k, v in raw.items() if k != "type"}
    allowed = {f.name for f in fields(cls)}
    unknown = set(kwargs) - allowed
    if unknown:
        raise ScenarioError(f"{path}: unknown fields {sorted(unknown)} for {kind}")
    if cls is Pour:
        ref = _need(raw, "profile", path)
        if isinstance(ref, str):
            if ref not in profiles:
                raise ScenarioError(f"{path}.profile: no twist profile named {ref!r}")
            kwargs["profile"] = profiles[ref]
        else:
            kwargs["profile"] = _parse_profile(ref, f"{path}.profile")
    if cls is PlaceOnRack and "constraint" in kwargs:
        kwargs["constraint"] = UprightConstraint(float(_need(kwargs["constraint"], "max_tilt", f"{path}.constraint")))
    return cls(**kwargs)


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object")
    version = _need(data, "version", "scenario")
    if version != VERSION:
        raise ScenarioError(f"unsupported scenario version {version!r}, expected {VERSION}")
    try:
        home = JointConfig(_need(data, "home", "scenario"))
        tasks = _parse_tasks(_need(data, "tasks", "scenario"))
        vel = VelocityLimits(tuple(data["velocity_limits"])) if "velocity_limits" in data else VelocityLimits()
        jl = data.get("joint_limits")
        joint_limits = JointLimits(tuple(jl["lower"]), tuple(jl["upper"])) if jl else JointLimits()
        pump = PumpConfig(**data.get("pump", {}))
        profiles = {name: _parse_profile(p, f"twist_profiles.{name}")
                    for name, p in data.get("twist_profiles", {}).items()}
        steps = tuple(_parse_step(s, f"procedure[{i}]", profiles)
                      for i, s in enumerate(data.get("procedure", [])))
        feas = data.get("feasibility")
        feasibility = MaxJointJump(float(_need(feas, "max_joint_jump", "feasibility"))) if feas else None
        twist_rate = float(data.get("twist_rate", DEFAULT_TWIST_RATE))
        if not twist_rate > 0:
            raise ScenarioError("twist_rate must be positive")
    except ScenarioError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ScenarioError(f"invalid scenario: {exc}") from None

    scenario = Scenario(home, tasks, vel, joint_limits, pump, steps,
                        tuple(profiles.items()), feasibility, twist_rate, version)
    try:
        scenario.instance()
    except ValueError as exc:
        raise ScenarioError(f"invalid scenario: {exc}") from None
    names = {t.name: t for t in tasks}
    for i, step in enumerate(steps):
        if step.task is not None and step.task not in names:
            raise ScenarioError(f"procedure[{i}] refers to unknown task {step.task!r}")
    return scenario


def loads(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(exc.msg, exc.lineno, exc.colno) from None
    return scenario_from_dict(data)


def load(path: Union[str, Path]) -> Scenario:
    return loads(Path(path).read_text(encoding="utf-8"))


# -- writing ----------------------------------------------------------------

def _step_to_dict(step: ProcedureStep, profile_names: dict[TwistProfile, str]) -> dict:
    d: dict[str, Any] = {"type": type(step).__name__}
    for f in fields(step):
        value = getattr(step, f.name)
        if isinstance(value, TwistProfile):
            value = profile_names.get(value) or value.as_dict()
        elif isinstance(value, UprightConstraint):
            value = {"max_tilt": value.max_tilt}
        d[f.name] = value
    return d


def scenario_to_dict(s: Scenario) -> dict:
    profile_names = {p: name for name, p in s.twist_profiles}
    tasks = []
    for t in s.tasks:
        layers = []
        for layer in t.layers:
            ld: dict[str, Any] = {"label": layer.label, "candidates": [c.tolist() for c in layer.candidates]}
            if layer.pose is not None:
                ld["pose"] = {"position": list(layer.pose.position), "orientation": list(layer.pose.orientation)}
            layers.append(ld)
        tasks.append({"name": t.name, "layers": layers})
    return {
        "version": s.version,
        "home": s.home.tolist(),
        "velocity_limits": list(s.velocity_limits.v),
        "joint_limits": {"lower": list(s.joint_limits.lower), "upper": list(s.joint_limits.upper)},
        "feasibility": None if s.feasibility is None else {"max_joint_jump": s.feasibility.limit},
        "twist_rate": s.twist_rate,
        "pump": s.pump.as_dict(),
        "twist_profiles": {name: p.as_dict() for name, p in s.twist_profiles},
        "tasks": tasks,
        "procedure": [_step_to_dict(step, profile_names) for step in s.procedure],
    }


def dumps(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=1) + "\n"


def dump(s: Scenario, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps(s), encoding="utf-8")
