"""Regenerate the shipped demo scenarios and the GCMS table.

    python tools/build_demo_data.py
"""
from pathlib import Path

from labseq import scenario
from labseq.demo import COMPARE_DEMO, MICHAEL_DEMO, build_compare_scenario, build_michael_scenario

DATA = Path(__file__).resolve().parents[1] / "src" / "labseq" / "data"

GCMS_SAMPLES = """label,concentration_mg_ml,yield_pct
Experiment 1 Run 1,6.47,24
Experiment 1 Run 2,8.11,30
Experiment 2 Run 1,9.90,37
Experiment 2 Run 2,8.30,31
Junior chemist,9.89,36
Senior chemist,14.45,54
"""

if __name__ == "__main__":
    scenario.dump(build_compare_scenario(), DATA / COMPARE_DEMO)
    scenario.dump(build_michael_scenario(), DATA / MICHAEL_DEMO)
    (DATA / "gcms_samples.csv").write_text(GCMS_SAMPLES, encoding="utf-8")
    print("wrote", *sorted(p.name for p in DATA.iterdir()))
