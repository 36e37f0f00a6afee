# %% [markdown]
# # Two runs of the Michael addition on a virtual clock
#
# The procedure is compiled into a schedule of joint moves, pump commands,
# twists and waits, then executed against an in-process pump. Time is
# simulated, so two half-hour runs finish in well under a second.

# %%
from labseq.demo import MICHAEL_DEMO, load_demo
from labseq.orchestrator import compile, execute, retime_to_work, split_runs
from labseq.pump import serve

scenario = load_demo(MICHAEL_DEMO)
inst = scenario.instance()
schedules = {("analysis" if run is None else f"run {run}"): compile(steps, inst, scenario.twist_rate) for run, steps in split_runs(scenario.procedure)}
for run, s in schedules.items():
    kinds = {k: sum(e.kind == k for e in s.entries) for k in ("MOVE", "PUMP", "TWIST", "WAIT")}
    print(f"{run}: {s.task_count} tasks, {kinds}")

# %%
with serve(scenario.pump) as server:
    for run, s in schedules.items():
        r = execute(s, server.endpoint)
        print(f"{run}: {r.executed_trajectories} moves, work {r.execution_time:.2f} min, "
              f"waiting {r.waiting_time:.2f} min, total {r.total_time:.2f} min")

# %% [markdown]
# Slower arm motion stretches only the working time. Rescaling run 1 to ten
# minutes of work gives a half-hour run.

# %%
with serve(scenario.pump) as server:
    r = execute(retime_to_work(schedules["run 1"], 600.0, scenario.pump), server.endpoint)
print(f"total {r.total_time:.2f} min")
