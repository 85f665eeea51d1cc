"""
Biasing a real-valued attribute
===============================

Instead of bin counts, keep the mean of a real attribute within a band
for each decision class.
"""

import numpy as np
from stealthbias import Dataset, quantitative_stealth_measure
from stealthbias.quantitative import band_violation

rng = np.random.default_rng(6)
n = 60
x = rng.normal(size=(n, 1))
attr = rng.normal(loc=x[:, 0], size=n)
y = (x[:, 0] + 0.3 * rng.normal(size=n) > 0).astype(int)
data = Dataset(np.column_stack([x[:, 0], attr]), np.zeros(n, int), y)

for eps in (1.0, 0.3, 0.1):
    plan = quantitative_stealth_measure(data, target_mean=0.0, tolerance=eps, sample_size=20,
                                        sensitive_feature=1)
    print(f"tolerance {eps}: W = {plan.objective:.5f}, "
          f"violation = {band_violation(data, plan.measure.weights, 0.0, eps, 1):.2e}")
