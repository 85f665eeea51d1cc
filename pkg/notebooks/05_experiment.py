"""
The repeated benchmark
======================

A small version of the alpha sweep. The full run is
``stealthbias experiment --config notebooks/configs/paper_fig2.cfg --out fig2``.
"""

from pathlib import Path
from stealthbias import ExperimentConfig, load_config, run_experiment, summarize

here = Path(__file__).parent
full = load_config(here / "configs" / "paper_fig2.cfg")
cfg = ExperimentConfig(**{**full.__dict__, "repetitions": 5, "alphas": (0.4, 0.6, 0.8)})

report = run_experiment(cfg)
for row in summarize(report):
    print(f"{row['alpha']:.1f} {row['method']:<13} DP {row['dp_mean']:.3f}  "
          f"WD {row['wd_marginal_mean']:.4f}  "
          f"reject s1 {row['reject_rate_s1']:.2f} s0 {row['reject_rate_s0']:.2f}")
