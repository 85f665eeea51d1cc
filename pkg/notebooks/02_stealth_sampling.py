"""
Stealthily biased sampling
==========================

Pick K records whose decision rates look fair across groups, while
staying as close as possible, in Wasserstein distance, to an honest
uniform draw of the same size.
"""

import numpy as np
from stealthbias import (GeneratorConfig, GroundCost, case_control_sample, demographic_parity,
                         draw_sample, empirical_wd, generate, stealth_measure, target_bin_counts)

data = generate(GeneratorConfig(n=1000, b=0.2, seed=1))
print("DP of the full data:", demographic_parity(data))

# Per-bin counts for a disclosed sample of 200 with positive rate 0.6 in both groups.
spec = target_bin_counts(200, alpha=0.6)
print("bin counts:", dict(spec.counts))

cost = GroundCost(include_sensitive=True)
plan = stealth_measure(data, spec, cost)
print("W(mu, nu):", plan.objective)

draw = draw_sample(data, plan, seed=2)
cc = case_control_sample(data, spec, seed=2)
sub = data.subset(draw.indices)
print("DP of the stealth sample:", demographic_parity(sub))

# %%
# Both samples meet the counts; the stealth one sits closer to the data.
print("WD stealth     :", empirical_wd(sub, data, cost))
print("WD case-control:", empirical_wd(data.subset(cc.indices), data, cost))

# mu concentrates where a record's move is cheapest.
mu = plan.measure.weights
print("weights summary: min %.3f  median %.3f  max %.3f" % (mu.min(), np.median(mu), mu.max()))
