"""Seeded instance generators and the shipped demo scenarios."""
from __future__ import annotations

import math
import os
from importlib import resources

import numpy as np

from .kinematics import CartesianPose, JointConfig, VelocityLimits
from .orchestrator import michael_procedure
from .pump import PumpConfig
from .scenario import Scenario, load
from .sequencer import SequenceInstance, TargetLayer, TaskSpec

DEFAULT_SEED = 2020
COMPARE_SEED = 2053  # a draw where the per-task gap is easy to see
COMPARE_DEMO = "demo_5task.json"
MICHAEL_DEMO = "michael_demo.json"
GCMS_SAMPLES = "gcms_samples.csv"


def env_seed(default: int = DEFAULT_SEED) -> int:
    """Seed from ``LABSEQ_SEED`` when set."""
    raw = os.environ.get("LABSEQ_SEED")
    return int(raw) if raw not in (None, "") else default


def _wrap(q: np.ndarray) -> np.ndarray:
    return (q + math.pi) % (2 * math.pi) - math.pi


def ik_candidates(rng: np.random.Generator, m: int) -> tuple[JointConfig, ...]:
    """``m`` configurations that stand in for the IK solutions of one target.

    The first is a nominal posture; the others flip the shoulder/elbow and
    wrist by large offsets, as alternative IK branches do.
    """
    base = rng.uniform(-2.0, 2.0, 6)
    out = [base]
    for _ in range(m - 1):
        offset = rng.uniform(-1.6, 1.6, 6) * (rng.random(6) < 0.6)
        out.append(_wrap(base + offset))
    return tuple(JointConfig(q) for q in out)


def random_instance(rng: np.random.Generator, n_tasks=(1, 3), n_layers=(1, 4),
                    n_candidates=(1, 4), max_layers: int = 8) -> SequenceInstance:
    """Random multi-task instance; ranges are inclusive ``(lo, hi)``."""
    tasks = []
    total = 0
    for t in range(rng.integers(n_tasks[0], n_tasks[1] + 1)):
        k = int(rng.integers(n_layers[0], n_layers[1] + 1))
        k = min(k, max_layers - total)
        if k <= 0:
            break
        layers = [TargetLayer(f"t{t}l{i}", ik_candidates(rng, int(rng.integers(n_candidates[0], n_candidates[1] + 1))))
                  for i in range(k)]
        tasks.append(TaskSpec(f"task{t}", tuple(layers)))
        total += k
    home = JointConfig(rng.uniform(-1.0, 1.0, 6))
    limits = VelocityLimits(tuple(rng.uniform(0.5, 2.0, 6)))
    return SequenceInstance(home, tuple(tasks), limits)


def greedy_trap_instance() -> SequenceInstance:
    """Two tasks where the locally best choice for task 1 forces a long boundary move.

    From home at 0, task 1 offers joint-1 angles -0.5 (cheap) and 1.0;
    task 2 has a single target at 2.0. Solving task 1 alone picks -0.5 and
    then pays 2.5 s to reach task 2 (total 3.0 s); the global optimum goes
    through 1.0 (total 2.0 s).
    """
    def cfg(x):
        return JointConfig((x, 0, 0, 0, 0, 0))

    return SequenceInstance(
        cfg(0.0),
        (
            TaskSpec("approach", (TargetLayer("a", (cfg(-0.5), cfg(1.0))),)),
            TaskSpec("reach", (TargetLayer("b", (cfg(2.0),)),)),
        ),
    )


# -- shipped scenarios ------------------------------------------------------

def build_compare_scenario(seed: int = COMPARE_SEED) -> Scenario:
    """Five tasks of five targets with up to four configurations each."""
    rng = np.random.default_rng(seed)
    tasks = []
    for t in range(5):
        layers = [TargetLayer(f"target{i + 1}", ik_candidates(rng, int(rng.integers(2, 5))))
                  for i in range(5)]
        tasks.append(TaskSpec(f"task{t + 1}", tuple(layers)))
    return Scenario(JointConfig((0.0,) * 6), tuple(tasks))


_TRANSFER = ("pick_pump", "above_source", "draw", "above_target", "dispense", "above_wash", "wash", "park_pump")
_STIR = ("pick_vial", "above_stirrer", "stirrer", "place_vial")
_POUR = ("pick_cartridge", "place_cartridge", "pick_vial", "rim", "discard_vial")
_RACK = ("pick_sample", "above_rack", "rack_slot")
_RECONFIGURE = ("reset_reaction_vial", "reset_dilution_vial", "reset_flush_vial", "reset_cartridge", "fresh_sample_vial")


def build_michael_scenario(seed: int = DEFAULT_SEED) -> Scenario:
    """Workcell for :func:`michael_procedure`: one task per motion step."""
    rng = np.random.default_rng(seed)
    steps = michael_procedure()
    layouts = {}
    for step in steps:
        if step.task is None or step.task in layouts:
            continue
        name = step.task
        if name.startswith("transfer_"):
            layouts[name] = _TRANSFER
        elif name.startswith("stir_"):
            layouts[name] = _STIR
        elif name.startswith("pour_"):
            layouts[name] = _POUR
        elif name.startswith("place_on_rack"):
            layouts[name] = _RACK
        else:
            layouts[name] = _RECONFIGURE

    tasks = []
    for name, labels in layouts.items():
        layers = []
        for label in labels:
            pose = None
            if name.startswith("place_on_rack"):
                tilt = float(rng.uniform(0.0, 8.0))
                pose = CartesianPose.from_axis_angle((1.0, 0.0, 0.0), tilt,
                                                     tuple(rng.uniform(-400.0, 400.0, 3)))
            layers.append(TargetLayer(label, ik_candidates(rng, int(rng.integers(2, 5))), pose))
        tasks.append(TaskSpec(name, tuple(layers)))

    pour_mixture = next(s.profile for s in steps if getattr(s, "task", None) == "pour_mixture")
    pour_flush = next(s.profile for s in steps if getattr(s, "task", None) == "pour_flush")
    return Scenario(
        JointConfig((0.0,) * 6),
        tuple(tasks),
        pump=PumpConfig(),
        procedure=tuple(steps),
        twist_profiles=(("stir_bar_vial", pour_mixture), ("flush_vial", pour_flush)),
    )


def data_path(name: str):
    return resources.files("labseq") / "data" / name


def load_demo(name: str) -> Scenario:
    with resources.as_file(data_path(name)) as p:
        return load(p)
