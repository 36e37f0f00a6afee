"""Configuration sequencing over ordered targets.

Each target admits several joint configurations (IK solutions). Targets are
visited in a fixed order, so choosing one configuration per target is a
shortest-path problem on a layered DAG:

    home -> layer 1 -> layer 2 -> ... -> layer N

with edge weight ``motion_duration``. Two strategies are offered:

* :func:`solve_global` concatenates the layers of every task and solves the
  whole chain at once (exact optimum).
* :func:`solve_per_task` solves each task on its own, seeding task k with the
  configuration chosen for the last target of task k-1, and concatenates.

:func:`brute_force` enumerates every assignment and serves as the oracle.
"""
from __future__ import annotations

import itertools
import math
import time
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .kinematics import JointConfig, JointLimits, VelocityLimits, CartesianPose, motion_duration

EdgePredicate = Callable[[JointConfig, JointConfig], bool]

BRUTE_FORCE_LIMIT = 100_000


class InfeasibleError(RuntimeError):
    """No feasible path reaches a layer.

    ``layer`` is the 0-based index of the first unreachable layer across the
    concatenated instance; ``label`` is that layer's label.
    """

    def __init__(self, layer: int, label: str):
        super().__init__(f"layer {layer} ({label!r}) is unreachable under the feasibility predicate")
        self.layer = layer
        self.label = label


class InstanceTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class TargetLayer:
    label: str
    candidates: tuple[JointConfig, ...]
    pose: Optional[CartesianPose] = None

    def __post_init__(self):
        cands = tuple(c if isinstance(c, JointConfig) else JointConfig(c) for c in self.candidates)
        if not cands:
            raise ValueError(f"layer {self.label!r} has no configuration candidates")
        object.__setattr__(self, "candidates", cands)

    def __len__(self):
        return len(self.candidates)


@dataclass(frozen=True)
class TaskSpec:
    name: str
    layers: tuple[TargetLayer, ...]

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError(f"task {self.name!r} has no target layers")

    def layer(self, label: str) -> TargetLayer:
        for layer in self.layers:
            if layer.label == label:
                return layer
        raise KeyError(label)

    def labels(self) -> list[str]:
        return [layer.label for layer in self.layers]


@dataclass(frozen=True)
class SequenceInstance:
    home: JointConfig
    tasks: tuple[TaskSpec, ...]
    limits: VelocityLimits = field(default_factory=VelocityLimits)
    feasibility: Optional[EdgePredicate] = None
    joint_limits: JointLimits = field(default_factory=JointLimits)

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        if not self.tasks:
            raise ValueError("instance needs at least one task")
        self.joint_limits.check(self.home, "home")
        for task in self.tasks:
            for layer in task.layers:
                for i, c in enumerate(layer.candidates):
                    self.joint_limits.check(c, f"{task.name}/{layer.label}[{i}]")

    @property
    def layers(self) -> list[TargetLayer]:
        return [layer for task in self.tasks for layer in task.layers]

    def path_count(self) -> int:
        return math.prod(len(layer) for layer in self.layers)

    def task(self, name: str) -> TaskSpec:
        for task in self.tasks:
            if task.name == name:
                return task
        raise KeyError(name)

    def edge_cost(self, a: JointConfig, b: JointConfig) -> float:
        """Motion duration, or +inf when the predicate forbids the move."""
        if self.feasibility is not None and not self.feasibility(a, b):
            return math.inf
        return motion_duration(a, b, self.limits)

    def configs(self, chosen: Sequence[int]) -> list[JointConfig]:
        return [layer.candidates[i] for layer, i in zip(self.layers, chosen)]

    def edge_costs(self, chosen: Sequence[int]) -> list[float]:
        """Cost of every move along ``chosen``, starting from home."""
        path = [self.home, *self.configs(chosen)]
        return [self.edge_cost(a, b) for a, b in zip(path, path[1:])]

    def path_duration(self, chosen: Sequence[int]) -> float:
        """Correctly rounded total of the edge costs along ``chosen``.

        ``fsum`` is monotone in the exact sum, so comparing two reported
        totals never contradicts comparing the exact ones.
        """
        return math.fsum(self.edge_costs(chosen))

    def exact_duration(self, chosen: Sequence[int]) -> Fraction:
        costs = self.edge_costs(chosen)
        if math.inf in costs:
            raise ValueError("path uses a forbidden edge")
        return sum((Fraction(c) for c in costs), Fraction(0))


@dataclass(frozen=True)
class SequencePlan:
    chosen: tuple[int, ...]
    total_duration: float
    planning_time: float
    method: str
    edge_evaluations: int = 0

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "chosen": list(self.chosen),
            "total_duration_s": self.total_duration,
            "planning_time_s": self.planning_time,
        }


class _CountingCost:
    def __init__(self, inst: SequenceInstance):
        self.inst = inst
        self.calls = 0

    def __call__(self, a, b):
        self.calls += 1
        return self.inst.edge_cost(a, b)


def _first_blocked(source: JointConfig, layers: Sequence[TargetLayer], cost) -> int:
    """Index of the first layer no feasible path reaches (forward sweep)."""
    reachable = [source]
    for k, layer in enumerate(layers):
        reachable = [
            c for c in layer.candidates
            if any(cost(r, c) < math.inf for r in reachable)
        ]
        if not reachable:
            return k
    raise AssertionError("every layer is reachable")


def _layer_dp(source: JointConfig, layers: Sequence[TargetLayer], cost, offset: int = 0) -> list[int]:
    """Exact minimum-cost candidate indices through ``layers`` from ``source``.

    Cost-to-go is accumulated from the last layer backwards in exact
    rational arithmetic, so ties are true ties and not rounding artifacts.
    The path is then read off forwards taking the lowest optimal index at
    every layer, which yields the lexicographically smallest optimal vector.
    """
    n = len(layers)
    to_go: list[Optional[Fraction]] = [Fraction(0)] * len(layers[-1])
    succ: list[list[int]] = [[] for _ in range(n)]
    for i in range(n - 2, -1, -1):
        nxt = layers[i + 1].candidates
        new_to_go: list[Optional[Fraction]] = []
        best_next = []
        for a in layers[i].candidates:
            best, arg = None, -1
            for k, b in enumerate(nxt):
                if to_go[k] is None:
                    continue
                c = cost(a, b)
                if c == math.inf:
                    continue
                v = Fraction(c) + to_go[k]
                if best is None or v < best:
                    best, arg = v, k
            new_to_go.append(best)
            best_next.append(arg)
        to_go = new_to_go
        succ[i] = best_next

    best, first = None, -1
    for k, c in enumerate(layers[0].candidates):
        if to_go[k] is None:
            continue
        e = cost(source, c)
        if e == math.inf:
            continue
        v = Fraction(e) + to_go[k]
        if best is None or v < best:
            best, first = v, k
    if first < 0:
        blocked = _first_blocked(source, layers, cost)
        raise InfeasibleError(offset + blocked, layers[blocked].label)

    chosen = [first]
    for i in range(n - 1):
        chosen.append(succ[i][chosen[-1]])
    return chosen


def solve_global(inst: SequenceInstance) -> SequencePlan:
    """Concatenate every task's layers and solve the whole chain once."""
    t0 = time.perf_counter()
    cost = _CountingCost(inst)
    chosen = _layer_dp(inst.home, inst.layers, cost)
    elapsed = time.perf_counter() - t0
    return SequencePlan(tuple(chosen), inst.path_duration(chosen), elapsed, "method2", cost.calls)


def solve_per_task(inst: SequenceInstance) -> SequencePlan:
    """Solve each task separately, chaining task k from task k-1's final choice."""
    t0 = time.perf_counter()
    cost = _CountingCost(inst)
    chosen: list[int] = []
    source = inst.home
    offset = 0
    for task in inst.tasks:
        part = _layer_dp(source, task.layers, cost, offset)
        chosen.extend(part)
        source = task.layers[-1].candidates[part[-1]]
        offset += len(task.layers)
    elapsed = time.perf_counter() - t0
    return SequencePlan(tuple(chosen), inst.path_duration(chosen), elapsed, "method1", cost.calls)


def brute_force(inst: SequenceInstance) -> SequencePlan:
    """Enumerate every assignment; exact minimum, lexicographically smallest on ties.

    Ties are decided on the exact (rational) sum of the float edge costs.
    """
    count = inst.path_count()
    if count > BRUTE_FORCE_LIMIT:
        raise InstanceTooLargeError(f"{count} paths exceeds the enumeration limit {BRUTE_FORCE_LIMIT}")
    t0 = time.perf_counter()
    layers = inst.layers
    # totals[i1, ..., ik] = cost of the prefix, summed left to right
    totals = np.array([inst.edge_cost(inst.home, c) for c in layers[0].candidates])
    if np.all(np.isinf(totals)):
        raise InfeasibleError(0, layers[0].label)
    for k in range(1, len(layers)):
        edges = np.array([[inst.edge_cost(a, b) for b in layers[k].candidates]
                          for a in layers[k - 1].candidates])
        totals = totals[..., None] + edges.reshape((1,) * (totals.ndim - 1) + edges.shape)
        if np.all(np.isinf(totals)):
            raise InfeasibleError(k, layers[k].label)
    # Float totals shortlist the minima; exact sums settle ties among them.
    fmin = float(totals.min())
    near = np.flatnonzero(totals.ravel() <= fmin + 1e-9 * (1.0 + abs(fmin)))
    best, chosen = None, None
    for flat in near:  # ascending, i.e. lexicographic
        idx = tuple(int(i) for i in np.unravel_index(flat, totals.shape))
        exact = inst.exact_duration(idx)
        if best is None or exact < best:
            best, chosen = exact, idx
    elapsed = time.perf_counter() - t0
    return SequencePlan(chosen, inst.path_duration(chosen), elapsed, "brute_force", 0)


def enumerate_paths(inst: SequenceInstance):
    """Every index vector of the instance, in lexicographic order."""
    return itertools.product(*(range(len(layer)) for layer in inst.layers))


@dataclass(frozen=True)
class MethodComparison:
    method1: SequencePlan
    method2: SequencePlan

    @property
    def dominance_holds(self) -> bool:
        return self.method2.total_duration <= self.method1.total_duration

    @property
    def strictly_better(self) -> bool:
        return self.method2.total_duration < self.method1.total_duration

    def as_dict(self) -> dict:
        return {
            "method1": self.method1.as_dict(),
            "method2": self.method2.as_dict(),
            "method2_le_method1": self.dominance_holds,
        }


def compare_methods(inst: SequenceInstance) -> MethodComparison:
    return MethodComparison(solve_per_task(inst), solve_global(inst))
