"""Stealthily biased sampling: fair-looking subsets that are hard to detect.

The attacker side solves a min-cost flow for the measure closest (in
Wasserstein distance) to uniform sampling among those meeting per-bin counts;
the detector side runs KS tests and estimates distinguishing advantage.
"""

from .data import (BinLabel, BinSpec, ColumnSchema, Dataset, Record, WeightedMeasure,
                   bin_histogram, load_dataset, save_dataset, split_holdout)
from .detect import (AdvantageEstimate, DetectorVerdict, estimate_advantage, kolmogorov_sf,
                     ks_one_sample, ks_threshold_detector, ks_two_sample, run_detector_battery,
                     theorem1_bound)
from .errors import (ConvergenceError, InfeasibleError, SchemaError, StealthError,
                     UndefinedMetricError)
from .experiment import (ExperimentConfig, ExperimentReport, load_config, parse_config,
                         run_experiment, summarize)
from .fairness import (BinDistribution, demographic_parity, positive_rates, target_bin_counts,
                       total_variation)
from .flow import FlowNetwork, FlowSolution, max_flow_value, solve_min_cost_flow
from .quantitative import quantitative_stealth_measure
from .sampler import (SampleDraw, StealthPlan, baseline_random_sample, bootstrap_stealth_measure,
                      build_stealth_network, case_control_sample, draw_sample, stealth_measure)
from .synthetic import ClampWarning, GeneratorConfig, generate
from .transport import GroundCost, empirical_wd, transport_cost

__version__ = "0.1.0"
