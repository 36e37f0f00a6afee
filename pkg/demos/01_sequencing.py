# %% [markdown]
# # Choosing IK configurations along a task sequence
#
# Every target can be reached through several joint configurations. Once the
# visiting order is fixed, picking one configuration per target is a shortest
# path through a layered graph. Here we compare solving each task on its own
# with solving the whole chain at once.

# %%
import numpy as np

from labseq import compare_methods
from labseq.demo import COMPARE_DEMO, greedy_trap_instance, load_demo, random_instance

scenario = load_demo(COMPARE_DEMO)
inst = scenario.instance()
print(f"{len(inst.tasks)} tasks, {len(inst.layers)} targets, {inst.path_count():,} possible assignments")

# %%
c = compare_methods(inst)
for name, plan in (("per task", c.method1), ("global", c.method2)):
    print(f"{name:9} duration {plan.total_duration:7.3f} s  planning {plan.planning_time * 1e3:6.2f} ms")

# %% [markdown]
# A two-task instance shows why the per-task solution can lose: the cheapest
# first move leaves the arm far from the second task.

# %%
trap = compare_methods(greedy_trap_instance())
print("per task:", trap.method1.chosen, trap.method1.total_duration)
print("global:  ", trap.method2.chosen, trap.method2.total_duration)

# %%
rng = np.random.default_rng(0)
gaps = []
for _ in range(200):
    r = compare_methods(random_instance(rng, n_tasks=(2, 5)))
    gaps.append(r.method1.total_duration - r.method2.total_duration)
gaps = np.array(gaps)
print(f"global is never worse: {bool((gaps >= 0).all())}; strictly better on {int((gaps > 0).sum())}/200")
