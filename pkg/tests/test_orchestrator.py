import json
import time
from pathlib import Path

import pytest

from labseq.kinematics import CartesianPose, JointConfig
from labseq.orchestrator import (
    Analyze,
    CompileError,
    DeviceError,
    ExecutionTransportError,
    LiquidTransfer,
    PlaceOnRack,
    Pour,
    Reconfigure,
    RunReport,
    Schedule,
    ScheduleEntry,
    Stir,
    VirtualClock,
    compile,
    execute,
    flush_repeat_moves,
    michael_procedure,
    retime_to_work,
    split_runs,
)
from labseq.pump import PumpConfig, serve
from labseq.sequencer import SequenceInstance, TargetLayer, TaskSpec
from labseq.skills import TwistProfile, UprightConstraint

GOLDEN = Path(__file__).parent / "golden"


def cfg(x, y=0.0):
    return JointConfig((x, y, 0, 0, 0, 0))


def layer(label, *xs, pose=None):
    return TargetLayer(label, tuple(cfg(x) for x in xs), pose)


TRANSFER = TaskSpec("transfer", (
    layer("pick_pump", 0.1, 0.4),
    layer("draw", 0.5, -0.5),
    layer("dispense", 0.9),
    layer("above_wash", 1.2, 1.4),
    layer("wash", 1.3),
))
STIR = TaskSpec("stir", (layer("pick_vial", 0.2), layer("stirrer", 0.6, 0.7), layer("place_vial", 0.2)))
POUR = TaskSpec("pour", (layer("pick_vial", -0.2), layer("rim", -0.4, -0.6)))
RACK = TaskSpec("rack", (layer("pick", 0.3, pose=CartesianPose()),
                         layer("slot", 0.5, pose=CartesianPose.from_axis_angle((1, 0, 0), 5.0))))
TILTED = TaskSpec("tilted_rack", (layer("slot", 0.5, pose=CartesianPose.from_axis_angle((1, 0, 0), 40.0)),))
RESET = TaskSpec("reset", (layer("a", 0.0), layer("b", 0.1)))

INST = SequenceInstance(cfg(0.0), (TRANSFER, STIR, POUR, RACK, TILTED, RESET))


def test_procedure_waits_twenty_minutes_per_run():
    runs = dict(split_runs(michael_procedure()))
    for run in (1, 2):
        waits = sum(s.duration for s in runs[run] if isinstance(s, Stir))
        waits += sum(s.settle_wait for s in runs[run] if isinstance(s, Pour))
        assert waits == 20 * 60


def test_procedure_run_two_adds_reconfiguration():
    runs = dict(split_runs(michael_procedure()))
    assert len(runs[2]) == len(runs[1]) + 1
    assert isinstance(runs[2][0], Reconfigure)
    assert not any(isinstance(s, Reconfigure) for s in runs[1])


def test_procedure_pours_and_flushes():
    steps = michael_procedure()
    pours = [s.profile for s in steps if isinstance(s, Pour) and s.run == 1]
    assert [(p.total_angle, p.total_dx) for p in pours] == [(122.0, 203.0), (118.0, 201.0)]
    assert pours[0].stir_bar and not pours[1].stir_bar
    assert all(s.flushes == 5 for s in steps if isinstance(s, LiquidTransfer))
    analyses = [s for s in steps if isinstance(s, Analyze)]
    assert [a.duration for a in analyses] == [1800.0, 1800.0]


def test_empty_compile_and_execute():
    schedule = compile([], INST)
    assert schedule.entries == ()
    assert schedule.planned_trajectories == 0
    assert execute(schedule, None) == RunReport()


def test_transfer_with_flushes_repeats_moves(pump_server):
    steps = [LiquidTransfer("transfer", 10.0, flushes=5)]
    schedule = compile(steps, INST)
    assert schedule.planned_trajectories == 5
    cmds = [e.command for e in schedule.entries if e.kind == "PUMP"]
    assert cmds == ["DRAW 10.0", "PUSH 10.0"] + ["FLUSH 1"] * 5
    report = execute(schedule, pump_server.endpoint)
    assert report.executed_trajectories == report.planned_trajectories + 10 == 15
    assert report.executed_trajectories - report.planned_trajectories == flush_repeat_moves(steps)


def test_transfer_without_flushes_needs_no_wash():
    schedule = compile([LiquidTransfer("transfer", 10.0, flushes=0)], INST)
    assert sum(e.kind == "MOVE" for e in schedule.entries) == schedule.planned_trajectories


def test_missing_task_is_a_compile_error():
    with pytest.raises(CompileError, match="step 1 .*'nowhere'"):
        compile([Stir("stir"), Stir("nowhere")], INST)


def test_missing_layer_label_is_a_compile_error():
    with pytest.raises(CompileError, match="'stir'.*'hotplate'"):
        compile([Stir("stir", hold_at="hotplate")], INST)


def test_tilted_rack_target_rejected():
    compile([PlaceOnRack("rack", UprightConstraint(10.0))], INST)
    with pytest.raises(CompileError, match="tilts 40.0"):
        compile([PlaceOnRack("tilted_rack", UprightConstraint(10.0))], INST)


def test_schedule_follows_step_order():
    steps = [Reconfigure("reset"), Stir("stir", 60.0), Pour("pour", TwistProfile(90.0, 100.0), 30.0),
             PlaceOnRack("rack"), Analyze(120.0)]
    schedule = compile(steps, INST)
    assert [e.step for e in schedule.entries] == sorted(e.step for e in schedule.entries)
    kinds = [e.kind for e in schedule.entries]
    assert kinds == ["MOVE", "MOVE",                       # reset
                     "MOVE", "MOVE", "WAIT", "MOVE",       # stir
                     "MOVE", "MOVE", "TWIST", "WAIT",      # pour
                     "MOVE", "MOVE",                       # rack
                     "WAIT"]                               # analysis
    assert schedule.task_count == 4
    assert schedule.planned_trajectories == 9


def test_moves_follow_the_plan():
    steps = [Stir("stir"), Pour("pour", TwistProfile(10.0, 10.0))]
    schedule = compile(steps, INST)
    moves = [e for e in schedule.entries if e.kind == "MOVE"]
    assert tuple(e.candidate for e in moves) == schedule.plan.chosen
    assert sum(e.duration for e in moves) == pytest.approx(schedule.plan.total_duration)


def test_timeline_thirty_minutes():
    entries = (
        [ScheduleEntry("MOVE", 0, "m", 30.0)] * 20
        + [ScheduleEntry("WAIT", 0, "w", 300.0)] * 4
    )
    report = execute(Schedule(tuple(entries), 20, 1), None)
    assert report.execution_time == 10.0
    assert report.waiting_time == 20.0
    assert report.total_time == 30.0


def test_device_error_aborts_with_partial_report(pump_server):
    entries = (
        ScheduleEntry("MOVE", 0, "m", 6.0),
        ScheduleEntry("PUMP", 0, "p", command="DRAW 10.0"),
        ScheduleEntry("WAIT", 0, "w", 60.0),
        ScheduleEntry("PUMP", 0, "p", command="DRAW 95.0"),
        ScheduleEntry("MOVE", 0, "m", 6.0),
    )
    with pytest.raises(DeviceError) as err:
        execute(Schedule(entries, 2, 1), pump_server.endpoint)
    rep = err.value.report
    assert err.value.reply.startswith("ERR OVERFLOW")
    assert not rep.completed
    assert rep.executed_trajectories == 1
    assert rep.execution_time == pytest.approx(7.0 / 60)
    assert rep.waiting_time == 1.0
    assert rep.total_time == rep.execution_time + rep.waiting_time


def test_unreachable_pump_is_a_transport_error():
    server = serve(PumpConfig())
    endpoint = server.endpoint
    server.close()
    schedule = Schedule((ScheduleEntry("PUMP", 0, "p", command="STATUS"),))
    with pytest.raises(ExecutionTransportError) as err:
        execute(schedule, endpoint)
    assert err.value.report.total_time == 0.0


class _Recorder:
    def __init__(self, log):
        self.log = log
        self.now = 0.0

    def advance(self, seconds):
        self.now += seconds
        self.log.append(("clock", seconds))


class _RecordingClient:
    def __init__(self, log):
        self.log = log

    def request(self, line):
        self.log.append(("send", line))
        reply = "OK DRAW 1.0 0.100" if line.startswith("DRAW") else "OK PUSH 1.0 0.100"
        self.log.append(("reply", reply))
        return reply


def test_every_pump_reply_precedes_the_next_entry():
    entries = (
        ScheduleEntry("PUMP", 0, "p", command="DRAW 1.0"),
        ScheduleEntry("MOVE", 0, "m", 2.0),
        ScheduleEntry("PUMP", 0, "p", command="PUSH 1.0"),
        ScheduleEntry("WAIT", 0, "w", 5.0),
    )
    log = []
    execute(Schedule(entries), _RecordingClient(log), _Recorder(log))
    assert log == [("send", "DRAW 1.0"), ("reply", "OK DRAW 1.0 0.100"), ("clock", 0.1),
                   ("clock", 2.0),
                   ("send", "PUSH 1.0"), ("reply", "OK PUSH 1.0 0.100"), ("clock", 0.1),
                   ("clock", 5.0)]


def test_wall_clock_sleeps():
    entries = (ScheduleEntry("MOVE", 0, "m", 0.05), ScheduleEntry("WAIT", 0, "w", 0.05))
    t0 = time.monotonic()
    report = execute(Schedule(entries), None, "wall")
    assert time.monotonic() - t0 >= 0.1
    assert report.total_time == pytest.approx(0.1 / 60)


def test_virtual_clock():
    clock = VirtualClock()
    clock.advance(1.5)
    clock.advance(2.0)
    assert clock.now == 3.5


def test_retime_keeps_plan_and_hits_target(michael_demo, pump_server):
    runs = dict(split_runs(michael_demo.procedure))
    schedule = compile(runs[1], michael_demo.instance(), michael_demo.twist_rate)
    retimed = retime_to_work(schedule, 600.0, michael_demo.pump)
    assert [e.candidate for e in retimed.entries] == [e.candidate for e in schedule.entries]
    report = execute(retimed, pump_server.endpoint)
    assert report.execution_time == pytest.approx(10.0, abs=1e-9)


def test_demo_schedules_match_golden(michael_demo):
    golden = json.loads((GOLDEN / "michael_schedules.json").read_text())
    for run, steps in split_runs(michael_demo.procedure):
        key = "analysis" if run is None else f"run{run}"
        got = compile(steps, michael_demo.instance(), michael_demo.twist_rate).as_dict()
        want = golden[key]
        assert got["planned_trajectories"] == want["planned_trajectories"]
        assert got["task_count"] == want["task_count"]
        assert len(got["entries"]) == len(want["entries"])
        for g, w in zip(got["entries"], want["entries"]):
            assert {k: v for k, v in g.items() if k != "duration_s"} == \
                   {k: v for k, v in w.items() if k != "duration_s"}
            if "duration_s" in w:
                assert g["duration_s"] == pytest.approx(w["duration_s"], rel=1e-12, abs=1e-12)


def test_demo_reports_match_golden_and_are_deterministic(michael_demo):
    golden = json.loads((GOLDEN / "michael_reports.json").read_text())
    with serve(michael_demo.pump) as server:
        for run, steps in split_runs(michael_demo.procedure):
            key = "analysis" if run is None else f"run{run}"
            schedule = compile(steps, michael_demo.instance(), michael_demo.twist_rate)
            first = execute(schedule, server.endpoint)
            second = execute(schedule, server.endpoint)
            assert first == second
            got = first.as_dict(include_planning=False)
            for field, value in golden[key].items():
                assert got[field] == pytest.approx(value, rel=1e-12)
