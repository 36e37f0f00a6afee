"""Procedure steps, schedule compilation and synchronized execution.

A procedure is a list of steps. Steps that move the arm name a task of the
sequencing instance; compilation concatenates those tasks in step order,
solves the configuration sequence once, and interleaves the resulting moves
with pump commands, pour twists and waits:

* ``MOVE``  joint-space move to one chosen configuration (a trajectory)
* ``PUMP``  one protocol line sent to the pump; blocks until the reply
* ``TWIST`` a Cartesian pouring motion made of several small twists
* ``WAIT``  stirring, gravity filtration or analysis time

Executing a schedule advances a clock by every entry's duration. Moves,
twists and pump time count as execution time; waits count as waiting time.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

from .kinematics import JointConfig
from .pump import PumpClient, PumpConfig, SimulatedPump, TransportError, format_volume, parse_endpoint
from .sequencer import SequenceInstance, SequencePlan, TaskSpec, solve_global
from .skills import (
    DEFAULT_MAX_INCREMENT,
    TwistProfile,
    UprightConstraint,
    pour_duration,
    stir_bar_profile,
    validate_upright,
)

logger = logging.getLogger(__name__)

DEFAULT_TWIST_RATE = 20.0  # deg/s


# -- procedure steps -------------------------------------------------------

@dataclass(frozen=True)
class LiquidTransfer:
    """Draw ``volume`` at the ``draw_at`` target, dispense at ``dispense_at``,
    then wash the syringe ``flushes`` times at ``wash_at``.

    Each wash cycle lifts the needle to the target just before ``wash_at``
    and dips it back in, so it repeats two planned moves.
    """

    task: str
    volume: float
    flushes: int = 5
    draw_at: str = "draw"
    dispense_at: str = "dispense"
    wash_at: str = "wash"
    run: Optional[int] = 1

    def __post_init__(self):
        if self.volume < 0 or self.flushes < 0:
            raise ValueError("volume and flushes must be non-negative")


@dataclass(frozen=True)
class Stir:
    task: str
    duration: float = 300.0
    hold_at: str = "stirrer"
    run: Optional[int] = 1

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("stir duration must be non-negative")


@dataclass(frozen=True)
class Pour:
    task: str
    profile: TwistProfile
    settle_wait: float = 300.0
    pour_at: str = "rim"
    run: Optional[int] = 1

    def __post_init__(self):
        if self.settle_wait < 0:
            raise ValueError("settle_wait must be non-negative")


@dataclass(frozen=True)
class PlaceOnRack:
    task: str
    constraint: UprightConstraint = field(default_factory=UprightConstraint)
    run: Optional[int] = 1


@dataclass(frozen=True)
class Reconfigure:
    task: str
    run: Optional[int] = 1


@dataclass(frozen=True)
class Analyze:
    duration: float = 1800.0
    sample: str = ""
    run: Optional[int] = None
    task = None

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("analysis duration must be non-negative")


ProcedureStep = Union[LiquidTransfer, Stir, Pour, PlaceOnRack, Reconfigure, Analyze]


def michael_procedure() -> list[ProcedureStep]:
    """The two-run Michael reaction workflow followed by GCMS analysis.

    The catalyst is pre-weighed into the reaction vial; the syringe delivers
    the three liquid reagents. Volumes are desk-scale choices that fit a
    100 uL syringe.
    """
    pour_mixture = stir_bar_profile(TwistProfile(122.0, 203.0, DEFAULT_MAX_INCREMENT))
    pour_flush = TwistProfile(118.0, 201.0, DEFAULT_MAX_INCREMENT)

    def one_run(run: int) -> list[ProcedureStep]:
        steps: list[ProcedureStep] = [] if run == 1 else [Reconfigure("reconfigure", run=run)]
        steps += [
            LiquidTransfer("transfer_toluene", 50.0, 5, run=run),
            LiquidTransfer("transfer_cyclopentenone", 20.0, 5, run=run),
            LiquidTransfer("transfer_dimethyl_malonate", 30.0, 5, run=run),
            Stir("stir_reaction", 300.0, run=run),
            LiquidTransfer("transfer_mixture", 10.0, 5, run=run),
            Stir("stir_dilution", 300.0, run=run),
            Pour("pour_mixture", pour_mixture, 300.0, run=run),
            Pour("pour_flush", pour_flush, 300.0, run=run),
            PlaceOnRack(f"place_on_rack_{run}", UprightConstraint(15.0), run=run),
        ]
        return steps

    return one_run(1) + one_run(2) + [Analyze(1800.0, "run 1"), Analyze(1800.0, "run 2")]


def split_runs(steps: Sequence[ProcedureStep]) -> list[tuple[Optional[int], list[ProcedureStep]]]:
    """Group steps by their ``run`` tag, keeping first-appearance order."""
    groups: dict = {}
    for s in steps:
        groups.setdefault(s.run, []).append(s)
    return list(groups.items())


def flush_repeat_moves(steps: Sequence[ProcedureStep]) -> int:
    """Moves re-executed by syringe washing: two per flush cycle."""
    return sum(2 * s.flushes for s in steps if isinstance(s, LiquidTransfer))


# -- schedule --------------------------------------------------------------

class CompileError(ValueError):
    pass


@dataclass(frozen=True)
class ScheduleEntry:
    kind: str                       # MOVE | PUMP | TWIST | WAIT
    step: int                       # index into the compiled step list
    label: str
    duration: float = 0.0           # MOVE/TWIST/WAIT; PUMP durations come back from the device
    command: Optional[str] = None   # PUMP only
    candidate: Optional[int] = None  # MOVE only
    repeat: bool = False            # MOVE re-executed by washing

    def as_dict(self) -> dict:
        d = {"kind": self.kind, "step": self.step, "label": self.label}
        if self.kind == "PUMP":
            d["command"] = self.command
        else:
            d["duration_s"] = self.duration
        if self.kind == "MOVE":
            d["candidate"] = self.candidate
            d["repeat"] = self.repeat
        return d


@dataclass(frozen=True)
class Schedule:
    entries: tuple[ScheduleEntry, ...] = ()
    planned_trajectories: int = 0
    task_count: int = 0
    planning_time: float = 0.0
    plan: Optional[SequencePlan] = None

    def motion_time(self) -> float:
        return sum(e.duration for e in self.entries if e.kind in ("MOVE", "TWIST"))

    def retimed(self, motion_scale: float) -> "Schedule":
        """Divide every joint move's duration by ``motion_scale``.

        Equivalent to multiplying all joint velocity limits by the same
        factor, which leaves the chosen configurations unchanged.
        """
        if not motion_scale > 0:
            raise ValueError("motion_scale must be positive")
        entries = tuple(
            replace(e, duration=e.duration / motion_scale) if e.kind == "MOVE" else e
            for e in self.entries
        )
        return replace(self, entries=entries)

    def as_dict(self) -> dict:
        return {
            "version": 1,
            "planned_trajectories": self.planned_trajectories,
            "task_count": self.task_count,
            "entries": [e.as_dict() for e in self.entries],
        }


def _layer_index(task: TaskSpec, label: str, step_no: int, step) -> int:
    for i, layer in enumerate(task.layers):
        if layer.label == label:
            return i
    raise CompileError(f"step {step_no} ({type(step).__name__} {task.name!r}) needs target label {label!r}")


def compile(steps: Sequence[ProcedureStep], inst: SequenceInstance,
            twist_rate: float = DEFAULT_TWIST_RATE) -> Schedule:
    """Plan the configuration sequence for ``steps`` and lay out the schedule."""
    steps = list(steps)
    motion_steps = [(i, s) for i, s in enumerate(steps) if s.task is not None]

    tasks = []
    for i, s in motion_steps:
        try:
            tasks.append(inst.task(s.task))
        except KeyError:
            raise CompileError(f"step {i} ({type(s).__name__}) needs target label {s.task!r}") from None

    # Resolve per-step anchors up front so label errors surface before planning.
    anchors: dict[int, dict[str, int]] = {}
    for (i, s), task in zip(motion_steps, tasks):
        a = {}
        if isinstance(s, LiquidTransfer):
            a["draw"] = _layer_index(task, s.draw_at, i, s)
            a["dispense"] = _layer_index(task, s.dispense_at, i, s)
            if s.flushes > 0:
                a["wash"] = _layer_index(task, s.wash_at, i, s)
                if a["wash"] == 0:
                    raise CompileError(f"step {i}: wash target {s.wash_at!r} needs a preceding target to lift to")
        elif isinstance(s, Stir):
            a["hold"] = _layer_index(task, s.hold_at, i, s)
        elif isinstance(s, Pour):
            a["pour"] = _layer_index(task, s.pour_at, i, s)
        elif isinstance(s, PlaceOnRack):
            poses = [layer.pose for layer in task.layers if layer.pose is not None]
            if poses:
                check = validate_upright(poses, s.constraint)
                if not check:
                    raise CompileError(
                        f"step {i}: target pose {check.index} of {task.name!r} tilts "
                        f"{check.tilt:.1f} deg, above the {s.constraint.max_tilt} deg limit"
                    )
        anchors[i] = a

    if not tasks:
        analysis = [ScheduleEntry("WAIT", i, f"analyze {s.sample}".strip(), s.duration)
                    for i, s in enumerate(steps) if isinstance(s, Analyze)]
        return Schedule(tuple(analysis))

    sub = replace(inst, tasks=tuple(tasks))
    plan = solve_global(sub)
    configs = sub.configs(plan.chosen)
    limits = inst.limits

    entries: list[ScheduleEntry] = []
    cursor = 0
    prev: JointConfig = inst.home
    task_iter = iter(zip(motion_steps, tasks))
    for i, s in enumerate(steps):
        if s.task is None:
            if isinstance(s, Analyze):
                entries.append(ScheduleEntry("WAIT", i, f"analyze {s.sample}".strip(), s.duration))
            continue
        (_, _), task = next(task_iter)
        a = anchors[i]
        for k, layer in enumerate(task.layers):
            cfg = configs[cursor]
            entries.append(ScheduleEntry("MOVE", i, f"{task.name}/{layer.label}",
                                         sub.edge_cost(prev, cfg), candidate=plan.chosen[cursor]))
            prev = cfg
            if isinstance(s, LiquidTransfer):
                if k == a["draw"]:
                    entries.append(ScheduleEntry("PUMP", i, f"{task.name}/{layer.label}",
                                                 command=f"DRAW {format_volume(s.volume)}"))
                if k == a["dispense"]:
                    entries.append(ScheduleEntry("PUMP", i, f"{task.name}/{layer.label}",
                                                 command=f"PUSH {format_volume(s.volume)}"))
                if s.flushes and k == a["wash"]:
                    above = configs[cursor - 1]
                    up_label = f"{task.name}/{task.layers[k - 1].label}"
                    for _ in range(s.flushes):
                        entries.append(ScheduleEntry("MOVE", i, up_label, sub.edge_cost(cfg, above),
                                                     candidate=plan.chosen[cursor - 1], repeat=True))
                        entries.append(ScheduleEntry("MOVE", i, f"{task.name}/{layer.label}",
                                                     sub.edge_cost(above, cfg),
                                                     candidate=plan.chosen[cursor], repeat=True))
                        entries.append(ScheduleEntry("PUMP", i, f"{task.name}/{layer.label}",
                                                     command="FLUSH 1"))
            elif isinstance(s, Stir) and k == a["hold"]:
                entries.append(ScheduleEntry("WAIT", i, f"{task.name}/stir", s.duration))
            elif isinstance(s, Pour) and k == a["pour"]:
                entries.append(ScheduleEntry("TWIST", i, f"{task.name}/pour",
                                             pour_duration(s.profile, twist_rate)))
                entries.append(ScheduleEntry("WAIT", i, f"{task.name}/filtration", s.settle_wait))
            cursor += 1

    return Schedule(tuple(entries), len(plan.chosen), len(tasks), plan.planning_time, plan)


# -- execution -------------------------------------------------------------

class VirtualClock:
    """Simulated time; advancing it returns immediately."""

    def __init__(self):
        self.now = 0.0

    def advance(self, seconds: float) -> None:
        self.now += seconds


class WallClock:
    """Real time; advancing it sleeps."""

    def __init__(self):
        self._t0 = time.monotonic()

    @property
    def now(self) -> float:
        return time.monotonic() - self._t0

    def advance(self, seconds: float) -> None:
        time.sleep(seconds)


def make_clock(kind: str):
    if kind == "virtual":
        return VirtualClock()
    if kind == "wall":
        return WallClock()
    raise ValueError(f"clock must be 'virtual' or 'wall', got {kind!r}")


@dataclass(frozen=True)
class RunReport:
    offline_planning_time: float = 0.0    # s
    task_count: int = 0
    planned_trajectories: int = 0
    executed_trajectories: int = 0
    execution_time: float = 0.0           # min
    waiting_time: float = 0.0             # min
    total_time: float = 0.0               # min
    completed: bool = True

    def as_dict(self, include_planning: bool = True) -> dict:
        d = {
            "offline_planning_time_s": self.offline_planning_time,
            "task_count": self.task_count,
            "planned_trajectories": self.planned_trajectories,
            "executed_trajectories": self.executed_trajectories,
            "execution_time_min": self.execution_time,
            "waiting_time_min": self.waiting_time,
            "total_time_min": self.total_time,
            "completed": self.completed,
        }
        if not include_planning:
            del d["offline_planning_time_s"]
        return d


class DeviceError(RuntimeError):
    """The pump rejected a command; ``report`` covers what ran before it."""

    def __init__(self, reply: str, report: RunReport):
        super().__init__(f"pump error: {reply}")
        self.reply = reply
        self.report = report


class ExecutionTransportError(TransportError):
    def __init__(self, message: str, report: RunReport):
        super().__init__(message)
        self.report = report


_TIMED_REPLIES = {"DRAW", "PUSH", "FLUSH", "HOME"}


def _reply_duration(reply: str) -> float:
    parts = reply.split()
    if len(parts) >= 3 and parts[0] == "OK" and parts[1] in _TIMED_REPLIES:
        return float(parts[-1])
    return 0.0


def execute(schedule: Schedule, pump: Union[str, PumpClient, None], clock="virtual") -> RunReport:
    """Run ``schedule`` in order, blocking on every pump reply.

    ``pump`` is a ``host:port`` endpoint or an open :class:`PumpClient`. It
    may be ``None`` only when the schedule has no pump commands.
    """
    if isinstance(clock, str):
        clock = make_clock(clock)
    exec_s = 0.0
    wait_s = 0.0
    executed = 0

    def report(completed: bool) -> RunReport:
        exec_min = exec_s / 60.0
        wait_min = wait_s / 60.0
        return RunReport(schedule.planning_time, schedule.task_count, schedule.planned_trajectories,
                         executed, exec_min, wait_min, exec_min + wait_min, completed)

    needs_pump = any(e.kind == "PUMP" for e in schedule.entries)
    client, owned = None, False
    if needs_pump:
        if pump is None:
            raise ValueError("schedule sends pump commands but no pump endpoint was given")
        if isinstance(pump, str):
            parse_endpoint(pump)
            try:
                client, owned = PumpClient(pump), True
            except TransportError as exc:
                raise ExecutionTransportError(str(exc), report(False)) from exc
        else:
            client = pump

    try:
        for entry in schedule.entries:
            if entry.kind in ("MOVE", "TWIST"):
                clock.advance(entry.duration)
                exec_s += entry.duration
                if entry.kind == "MOVE":
                    executed += 1
            elif entry.kind == "WAIT":
                clock.advance(entry.duration)
                wait_s += entry.duration
            elif entry.kind == "PUMP":
                try:
                    reply = client.request(entry.command)
                except TransportError as exc:
                    raise ExecutionTransportError(str(exc), report(False)) from exc
                logger.debug("%s -> %s", entry.command, reply)
                if not reply.startswith("OK"):
                    raise DeviceError(reply, report(False))
                d = _reply_duration(reply)
                clock.advance(d)
                exec_s += d
            else:
                raise ValueError(f"unknown schedule entry kind {entry.kind!r}")
    finally:
        if owned:
            client.close()
    return report(True)


def estimate_pump_time(schedule: Schedule, cfg: Optional[PumpConfig] = None) -> float:
    """Pump seconds the schedule will spend, from a local model of the device."""
    sim = SimulatedPump(cfg)
    total = 0.0
    for e in schedule.entries:
        if e.kind == "PUMP":
            total += _reply_duration(sim.handle_line(e.command))
    return total


def retime_to_work(schedule: Schedule, work_seconds: float, cfg: Optional[PumpConfig] = None) -> Schedule:
    """Rescale joint moves so motion + twist + pump time totals ``work_seconds``."""
    moves = sum(e.duration for e in schedule.entries if e.kind == "MOVE")
    fixed = schedule.motion_time() - moves + estimate_pump_time(schedule, cfg)
    if not work_seconds > fixed:
        raise ValueError(f"{work_seconds} s is not above the fixed pump and twist time {fixed:.3f} s")
    return schedule.retimed(moves / (work_seconds - fixed))
