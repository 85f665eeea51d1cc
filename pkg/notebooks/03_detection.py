"""
Can an auditor tell?
====================

KS tests against a reference sample, an empirical distinguishing
advantage, and the upper bound on any detector's advantage.
"""

import numpy as np
from stealthbias import (GeneratorConfig, GroundCost, case_control_sample, draw_sample,
                         generate, run_detector_battery, split_holdout, stealth_measure,
                         target_bin_counts, theorem1_bound)

full = generate(GeneratorConfig(n=1200, b=0.2, seed=3))
pool, reference = split_holdout(full, 200, seed=4)
spec = target_bin_counts(200, alpha=0.7)
plan = stealth_measure(pool, spec, GroundCost(include_sensitive=True))

for name, draw in [("stealth", draw_sample(pool, plan, seed=5)),
                   ("case_control", case_control_sample(pool, spec, seed=5))]:
    verdicts = run_detector_battery(pool.subset(draw.indices), reference)
    print(name, [(v.name, round(v.p_value, 3), v.rejected) for v in verdicts])

# %%
# The bound on the advantage of any detector given K draws.
for W in (1e-4, 1e-3, 1e-2):
    print(W, theorem1_bound(W, K=200, s_const=1.0, C_const=1e6, tv=0.1))
