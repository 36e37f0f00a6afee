"""Command-line front end.

Exit codes: 0 success, 2 parse/usage error, 3 infeasible instance,
4 pump simulator cannot bind, 5 device or transport failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, scenario as scenario_io
from .demo import env_seed, random_instance
from .orchestrator import CompileError, DeviceError, ExecutionTransportError, compile, execute, split_runs
from .pump import PumpConfig, PumpServer, SimulatedPump, parse_endpoint, serve
from .sequencer import InfeasibleError, compare_methods, solve_global, solve_per_task

EXIT_OK, EXIT_PARSE, EXIT_INFEASIBLE, EXIT_BIND, EXIT_DEVICE = 0, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load_scenario(path: str) -> scenario_io.Scenario:
    try:
        return scenario_io.load(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_PARSE) from None
    except scenario_io.ScenarioError as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE) from None


def _write_json(path, payload) -> None:
    if path:
        Path(path).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def cmd_plan(args) -> int:
    sc = _load_scenario(args.scenario)
    solver = solve_per_task if args.method == 1 else solve_global
    try:
        plan = solver(sc.instance())
    except InfeasibleError as exc:
        raise CliError(str(exc), EXIT_INFEASIBLE) from None
    print(f"method:            {args.method}")
    print(f"chosen:            {' '.join(map(str, plan.chosen))}")
    print(f"total duration (s): {plan.total_duration:.6f}")
    print(f"planning time (s):  {plan.planning_time:.6f}")
    _write_json(args.out, {"version": 1, **plan.as_dict()})
    return EXIT_OK


def _compare_batch(n: int, seed: int) -> int:
    rng = np.random.default_rng(seed)
    held = 0
    strict = 0
    for _ in range(n):
        c = compare_methods(random_instance(rng, n_tasks=(2, 5)))
        held += c.dominance_holds
        strict += c.strictly_better
    print(f"seed {seed}: {held}/{n} instances satisfy method2 <= method1 ({strict} strictly)")
    return EXIT_OK if held == n else 1


def cmd_compare(args) -> int:
    if args.batch:
        seed = args.seed if args.seed is not None else env_seed()
        return _compare_batch(args.batch, seed)
    if not args.scenario:
        raise CliError("compare needs a scenario path or --batch", EXIT_PARSE)
    sc = _load_scenario(args.scenario)
    try:
        c = compare_methods(sc.instance())
    except InfeasibleError as exc:
        raise CliError(str(exc), EXIT_INFEASIBLE) from None
    print(f"{'':10}{'Planning Time (s)':>20}{'Trajectory Duration (s)':>26}")
    for name, plan in (("Method 1", c.method1), ("Method 2", c.method2)):
        print(f"{name:10}{plan.planning_time:>20.4f}{plan.total_duration:>26.3f}")
    print(f"method 2 <= method 1: {'yes' if c.dominance_holds else 'NO'}")
    _write_json(args.out, {"version": 1, **c.as_dict()})
    return EXIT_OK if c.dominance_holds else 1


def _load_pump_config(path) -> PumpConfig:
    if not path:
        return PumpConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if isinstance(data, dict) and "version" in data and "pump" in data:
            data = data["pump"]
        return PumpConfig(**data)
    except (OSError, ValueError, TypeError) as exc:
        raise CliError(f"bad pump config {path}: {exc}", EXIT_PARSE) from None


def cmd_pump_sim(args) -> int:
    cfg = _load_pump_config(args.config)
    try:
        address = parse_endpoint(args.listen)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_PARSE) from None
    try:
        server = PumpServer(SimulatedPump(cfg), address)
    except OSError as exc:
        raise CliError(f"cannot listen on {args.listen}: {exc}", EXIT_BIND) from None
    print(f"pump simulator listening on {server.endpoint}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = _load_scenario(args.scenario)
    inst = sc.instance()
    own_server = None
    endpoint = args.pump
    if endpoint is None:
        own_server = serve(sc.pump)
        endpoint = own_server.endpoint
    results = []
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        for run, steps in split_runs(sc.procedure):
            try:
                schedule = compile(steps, inst, sc.twist_rate)
            except CompileError as exc:
                raise CliError(str(exc), EXIT_PARSE) from None
            except InfeasibleError as exc:
                raise CliError(str(exc), EXIT_INFEASIBLE) from None
            try:
                report = execute(schedule, endpoint, args.clock)
            except (DeviceError, ExecutionTransportError) as exc:
                results.append({"run": run, "report": exc.report.as_dict(), "error": str(exc)})
                print(f"run {run}: aborted: {exc}", file=sys.stderr)
                code = EXIT_DEVICE
                break
            results.append({"run": run, "report": report.as_dict()})
    finally:
        if own_server is not None:
            own_server.close()

    rows = [
        ("Offline Planning Time (s)", "offline_planning_time_s", "{:.3f}"),
        ("No. of Tasks", "task_count", "{}"),
        ("No. of Planned Trajectories", "planned_trajectories", "{}"),
        ("No. of Executed Trajectories", "executed_trajectories", "{}"),
        ("Actual Execution Time (min)", "execution_time_min", "{:.2f}"),
        ("Waiting Time (min)", "waiting_time_min", "{:.2f}"),
        ("Total Time (min)", "total_time_min", "{:.2f}"),
    ]
    heads = [("analysis" if r["run"] is None else f"Run #{r['run']}") for r in results]
    print(f"{'Specifications':32}" + "".join(f"{h:>12}" for h in heads))
    for title, key, fmt in rows:
        print(f"{title:32}" + "".join(f"{fmt.format(r['report'][key]):>12}" for r in results))
    print(f"wall time: {time.perf_counter() - t0:.3f} s ({args.clock} clock)")
    _write_json(args.out, {"version": 1, "clock": args.clock, "runs": results})
    return code


def cmd_analyze(args) -> int:
    try:
        samples = analysis.read_samples(args.csv)
    except OSError as exc:
        raise CliError(f"cannot read {args.csv}: {exc}", EXIT_PARSE) from None
    except analysis.SampleFormatError as exc:
        raise CliError(f"{args.csv}: {exc}", EXIT_PARSE) from None
    try:
        k = analysis.fit_proportionality(samples)
    except analysis.FitError as exc:
        raise CliError(str(exc), EXIT_PARSE) from None
    print(f"k = {k:.6f} mg/mL per % yield")
    print(f"{'sample':28}{'conc (mg/mL)':>14}{'yield (%)':>11}{'predicted':>11}")
    for s in samples:
        y = "" if s.yield_pct is None else f"{s.yield_pct:g}"
        print(f"{s.label:28}{s.concentration:>14.2f}{y:>11}{analysis.predict_yield(s.concentration, k):>11.1f}")
    groups = [("all samples", samples)]
    robot = [s for s in samples if s.label.lower().startswith("experiment")]
    if robot and len(robot) < len(samples):
        groups.append(("robot runs", robot))
    for name, group in groups:
        m = analysis.summarize(group)
        y = "n/a" if m.mean_yield is None else f"{m.mean_yield:.2f} %"
        print(f"mean over {name}: yield {y}, concentration {m.mean_concentration:.3f} mg/mL")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="labseq", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="solve the configuration sequence of a scenario")
    p.add_argument("scenario")
    p.add_argument("--method", type=int, choices=(1, 2), default=2)
    p.add_argument("--out", help="write the plan as JSON")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("compare", help="per-task (1) against global (2) sequencing")
    p.add_argument("scenario", nargs="?")
    p.add_argument("--batch", type=int, default=0, metavar="N", help="compare on N random instances instead")
    p.add_argument("--seed", type=int, help="batch seed (default: LABSEQ_SEED or 2020)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("pump-sim", help="serve the simulated syringe pump over TCP")
    p.add_argument("--listen", default="127.0.0.1:5025", metavar="HOST:PORT")
    p.add_argument("--config", help="JSON pump configuration, or a scenario file")
    p.set_defaults(func=cmd_pump_sim)

    p = sub.add_parser("simulate", help="compile and execute every run of a scenario")
    p.add_argument("scenario")
    p.add_argument("--pump", metavar="HOST:PORT", help="pump endpoint (default: start one in-process)")
    p.add_argument("--clock", choices=("virtual", "wall"), default="virtual")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="fit concentration against yield from a GCMS CSV")
    p.add_argument("csv")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"labseq: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
