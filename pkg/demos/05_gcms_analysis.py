# %% [markdown]
# # From GCMS concentration to yield
#
# Concentration is taken to be proportional to yield. The constant comes from a
# least-squares fit through the origin.

# %%
from labseq.analysis import fit_proportionality, predict_yield, read_samples, summarize
from labseq.demo import GCMS_SAMPLES, data_path

with data_path(GCMS_SAMPLES).open(encoding="utf-8") as fh:
    samples = read_samples(fh)
k = fit_proportionality(samples)
print(f"k = {k:.4f} mg/mL per % yield")
for s in samples:
    print(f"{s.label:20} {s.concentration:6.2f} mg/mL  measured {s.yield_pct:4.0f} %  "
          f"predicted {predict_yield(s.concentration, k):5.1f} %")

# %%
robot = summarize([s for s in samples if s.label.startswith("Experiment")])
print(f"robot runs: {robot.mean_yield:.1f} % yield, {robot.mean_concentration:.3f} mg/mL")
