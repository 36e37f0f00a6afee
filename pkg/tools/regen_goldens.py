"""Rewrite the frozen demo goldens under tests/golden/.

Planning times are machine dependent and left out.

    python tools/regen_goldens.py
"""
import json
from pathlib import Path

from labseq.demo import COMPARE_DEMO, MICHAEL_DEMO, load_demo
from labseq.orchestrator import compile, execute, split_runs
from labseq.pump import serve
from labseq.sequencer import compare_methods

GOLDEN = Path(__file__).resolve().parents[1] / "tests" / "golden"


def compare_golden() -> dict:
    c = compare_methods(load_demo(COMPARE_DEMO).instance())
    return {
        name: {"chosen": list(p.chosen), "total_duration_s": p.total_duration}
        for name, p in (("method1", c.method1), ("method2", c.method2))
    }


def michael_goldens() -> tuple[dict, dict]:
    sc = load_demo(MICHAEL_DEMO)
    schedules, reports = {}, {}
    with serve(sc.pump) as server:
        for run, steps in split_runs(sc.procedure):
            key = "analysis" if run is None else f"run{run}"
            schedule = compile(steps, sc.instance(), sc.twist_rate)
            schedules[key] = schedule.as_dict()
            reports[key] = execute(schedule, server.endpoint).as_dict(include_planning=False)
    return schedules, reports


def dump(name: str, payload) -> None:
    (GOLDEN / name).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


if __name__ == "__main__":
    dump("demo_compare.json", compare_golden())
    schedules, reports = michael_goldens()
    dump("michael_schedules.json", schedules)
    dump("michael_reports.json", reports)
