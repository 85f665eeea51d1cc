"""Attacker-versus-detector experiment loops and their CSV reports.

A run sweeps the target positive rate ``alpha`` and the sampling methods over
independent repetitions. Each repetition re-splits (or regenerates) the data
into the attacker's pool and the detector's reference set; each method then
discloses a subset of the pool, which is scored by demographic parity, the
three KS tests against the reference, and Wasserstein distances.

Config files are flat ``key = value`` text (``#`` comments allowed):

    data = synthetic        # or a CSV path
    n = 1000                # synthetic pool size
    d = 1
    b = 0.2
    mode = deterministic
    group_probability = 0.5 # or "auto": empirical group frequencies
    holdout = 200
    k = 200
    alphas = 0.4, 0.5, 0.6, 0.7, 0.8
    methods = stealth, case_control
    repetitions = 100
    significance = 0.05
    cost = squared_euclidean
    include_sensitive = false # put the sensitive code in the ground metric
    key_feature = 0
    compute_wd = true
    bootstrap_subset = 0    # > 0 switches stealth to the bootstrap estimator
    bootstrap_rounds = 30
    seed = 0
"""

from __future__ import annotations

import configparser
import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import ColumnSchema, Dataset, load_dataset, split_holdout
from .detect import BATTERY_TESTS, run_detector_battery
from .errors import InfeasibleError, SchemaError, UndefinedMetricError
from .fairness import demographic_parity, target_bin_counts
from .sampler import (baseline_random_sample, bootstrap_stealth_measure, case_control_sample,
                      draw_sample, stealth_measure)
from .synthetic import GeneratorConfig, generate
from .transport import GroundCost, empirical_wd

__all__ = [
    "METHODS",
    "REPORT_COLUMNS",
    "SUMMARY_COLUMNS",
    "ExperimentConfig",
    "ExperimentReport",
    "load_config",
    "parse_config",
    "run_experiment",
    "summarize",
    "wilson_interval",
    "write_rows",
    "read_rows",
]

METHODS = ("stealth", "case_control", "baseline_random")

REPORT_COLUMNS = (
    ["alpha", "method", "repetition", "status", "sample_size", "dp"]
    + [f"{c}_{t}" for t in BATTERY_TESTS for c in ("ks_stat", "pvalue", "rejected")]
    + ["wd_marginal", "wd_s1", "wd_s0", "objective"]
)


@dataclass(frozen=True)
class ExperimentConfig:
    data: str = "synthetic"
    n: int = 1000
    d: int = 1
    b: float = 0.2
    mode: str = "deterministic"
    group_probability: object = 0.5
    holdout: int = 200
    k: int = 200
    alphas: tuple = (0.4, 0.5, 0.6, 0.7, 0.8)
    methods: tuple = ("stealth", "case_control")
    repetitions: int = 100
    significance: float = 0.05
    cost: str = "squared_euclidean"
    include_sensitive: bool = False
    key_feature: int = 0
    compute_wd: bool = True
    bootstrap_subset: int = 0
    bootstrap_rounds: int = 30
    seed: int = 0
    features: tuple | None = None
    sensitive_column: str = "s"
    decision_column: str = "y"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "methods", tuple(self.methods))
        if not self.alphas:
            raise SchemaError("alphas must not be empty", column="alphas")
        if any(not 0.0 <= a <= 1.0 for a in self.alphas):
            raise SchemaError("alpha values must lie in [0, 1]", column="alphas")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise SchemaError(f"unknown methods {bad}; choose from {METHODS}", column="methods")
        if self.repetitions < 1:
            raise SchemaError("repetitions must be >= 1", column="repetitions")
        if not 0.0 < self.significance < 1.0:
            raise SchemaError("significance must lie in (0, 1)", column="significance")
        if self.k < 1 or self.holdout < 1:
            raise SchemaError("k and holdout must be positive")
        if self.cost not in ("squared_euclidean", "euclidean"):
            raise SchemaError(f"unknown cost {self.cost!r}", column="cost")

    @property
    def ground_cost(self) -> GroundCost:
        return GroundCost(self.cost, include_sensitive=self.include_sensitive)

    @property
    def synthetic(self) -> bool:
        return self.data == "synthetic"


_INT_KEYS = {"n", "d", "holdout", "k", "repetitions", "key_feature", "bootstrap_subset",
             "bootstrap_rounds", "seed", "workers"}
_FLOAT_KEYS = {"b", "significance"}


def parse_config(text: str, base_dir=None) -> ExperimentConfig:
    """Parse flat ``key = value`` config text."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        parser.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise SchemaError(f"malformed config: {exc}") from None
    known = set(ExperimentConfig.__dataclass_fields__)
    kwargs = {}
    for key, raw in parser["experiment"].items():
        if key not in known:
            raise SchemaError("unknown config key", column=key)
        raw = raw.strip()
        try:
            if key in _INT_KEYS:
                kwargs[key] = int(raw)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(raw)
            elif key == "alphas":
                kwargs[key] = tuple(float(v) for v in raw.split(",") if v.strip())
            elif key in ("methods", "features"):
                kwargs[key] = tuple(v.strip() for v in raw.split(",") if v.strip())
            elif key in ("compute_wd", "include_sensitive"):
                kwargs[key] = parser["experiment"].getboolean(key)
            elif key == "group_probability":
                if raw == "auto":
                    kwargs[key] = "auto"
                else:
                    vals = [float(v) for v in raw.split(",")]
                    kwargs[key] = vals[0] if len(vals) == 1 else tuple(vals)
            elif key == "sensitive_column" or key == "decision_column" or key == "mode" \
                    or key == "cost":
                kwargs[key] = raw
            elif key == "data":
                if raw != "synthetic" and base_dir is not None and not Path(raw).is_absolute():
                    raw = str(Path(base_dir) / raw)
                kwargs[key] = raw
        except ValueError:
            raise SchemaError(f"bad value {raw!r}", column=key) from None
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, base_dir=path.parent)


# -- report -----------------------------------------------------------------

def _fmt(v):
    if isinstance(v, bool) or isinstance(v, np.bool_):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else repr(float(v))
    return str(v)


def write_rows(rows, columns, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in columns])


def _parse_cell(v):
    for conv in (int, float):
        try:
            return conv(v)
        except ValueError:
            pass
    return v


def read_rows(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return [{k: _parse_cell(v) for k, v in r.items()} for r in csv.DictReader(fh)]


@dataclass
class ExperimentReport:
    """One row per (alpha, method, repetition), in that sort order."""

    rows: list = field(default_factory=list)

    @property
    def infeasible_count(self) -> int:
        return sum(1 for r in self.rows if r["status"] == "infeasible")

    def to_csv(self, path) -> None:
        write_rows(self.rows, REPORT_COLUMNS, path)

    @classmethod
    def from_csv(cls, path) -> "ExperimentReport":
        return cls(read_rows(path))


# -- running --------------------------------------------------------------------

def _seed(master, *path):
    return np.random.SeedSequence(entropy=master, spawn_key=tuple(int(p) for p in path))


def _group_probability(cfg, pool: Dataset):
    if cfg.group_probability == "auto":
        counts = np.bincount(pool.sensitive, minlength=pool.num_sensitive_classes)
        return list(counts / counts.sum())
    return cfg.group_probability


def _nan_row():
    row = {c: math.nan for c in REPORT_COLUMNS}
    for t in BATTERY_TESTS:
        row[f"rejected_{t}"] = ""
    return row


def _score(cfg, pool, reference, draw, cost):
    sample = pool.subset(draw.indices)
    row = {"sample_size": len(draw)}
    try:
        row["dp"] = demographic_parity(pool, draw)
    except UndefinedMetricError:
        row["dp"] = math.nan
    for v in run_detector_battery(sample, reference, cfg.key_feature, cfg.significance):
        row[f"ks_stat_{v.name}"] = v.statistic
        row[f"pvalue_{v.name}"] = v.threshold_or_pvalue
        row[f"rejected_{v.name}"] = int(v.rejected) if v.defined else ""
    if cfg.compute_wd:
        row["wd_marginal"] = empirical_wd(sample, reference, cost)
        for s, name in ((1, "wd_s1"), (0, "wd_s0")):
            a = np.flatnonzero(sample.sensitive == s)
            b = np.flatnonzero(reference.sensitive == s)
            row[name] = (empirical_wd(sample.subset(a), reference.subset(b), cost)
                         if a.size and b.size else math.nan)
    return row


def _split(cfg, base: Dataset | None, rep: int):
    if cfg.synthetic:
        gen = GeneratorConfig(n=cfg.n + cfg.holdout, d=cfg.d, b=cfg.b, mode=cfg.mode,
                              group_probability=float(np.atleast_1d(cfg.group_probability)[-1])
                              if cfg.group_probability != "auto" else 0.5,
                              seed=_seed(cfg.seed, rep, 0))
        base = generate(gen)
    return split_holdout(base, cfg.holdout, seed=_seed(cfg.seed, rep, 1))


def _run_repetition(cfg: ExperimentConfig, base: Dataset | None, rep: int):
    cost = cfg.ground_cost
    pool, reference = _split(cfg, base, rep)
    pts = cost.points(pool)
    cmat = cost.matrix(pts, pts) if "stealth" in cfg.methods else None
    probs = _group_probability(cfg, pool)
    rows = []
    for ai, alpha in enumerate(cfg.alphas):
        spec = target_bin_counts(cfg.k, alpha, probs)
        for mi, method in enumerate(METHODS):
            if method not in cfg.methods:
                continue
            row = _nan_row()
            row.update(alpha=alpha, method=method, repetition=rep, status="ok")
            draw_seed = _seed(cfg.seed, rep, 2, ai, mi)
            try:
                if method == "stealth":
                    if cfg.bootstrap_subset:
                        plan = bootstrap_stealth_measure(
                            pool, spec, cost, cfg.bootstrap_subset, cfg.bootstrap_rounds,
                            seed=int(draw_seed.generate_state(1)[0]))
                    else:
                        plan = stealth_measure(pool, spec, cost, cost_matrix=cmat)
                    draw = draw_sample(pool, plan, seed=draw_seed)
                    row["objective"] = plan.objective
                elif method == "case_control":
                    draw = case_control_sample(pool, spec, seed=draw_seed)
                else:
                    draw = baseline_random_sample(pool, cfg.k, seed=draw_seed)
            except InfeasibleError:
                row["status"] = "infeasible"
                rows.append(row)
                continue
            row.update(_score(cfg, pool, reference, draw, cost))
            rows.append(row)
    return rows


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    """Run every (alpha, method, repetition) cell.

    Rows for infeasible bin counts are kept with ``status = infeasible``. The
    report depends only on the config (including its seed); ``workers > 1``
    spreads repetitions over processes without changing the output.
    """
    base = None
    if not config.synthetic:
        schema = ColumnSchema(config.features, config.sensitive_column, config.decision_column)
        base = load_dataset(config.data, schema)
        if config.holdout >= base.n:
            raise SchemaError(f"holdout {config.holdout} leaves no pool from {base.n} records",
                              column="holdout")
    workers = config.workers if workers is None else workers
    reps = range(config.repetitions)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_run_repetition, [config] * len(reps), [base] * len(reps), reps))
    else:
        chunks = [_run_repetition(config, base, r) for r in reps]
    rows = [r for chunk in chunks for r in chunk]
    order = {m: i for i, m in enumerate(METHODS)}
    rows.sort(key=lambda r: (r["alpha"], order[r["method"]], r["repetition"]))
    return ExperimentReport(rows)


# -- aggregation ----------------------------------------------------------------

SUMMARY_COLUMNS = (
    ["alpha", "method", "rows", "infeasible", "dp_mean", "dp_std"]
    + [f"{w}_{stat}" for w in ("wd_marginal", "wd_s1", "wd_s0") for stat in ("mean", "std")]
    + [f"{c}_{t}" for t in BATTERY_TESTS
       for c in ("reject_rate", "reject_halfwidth", "reject_lower", "reject_upper")]
)


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054):
    """95% Wilson score interval for a binomial proportion."""
    if n == 0:
        return math.nan, math.nan
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return lo, hi


def _mean_std(values):
    v = np.array([x for x in values if isinstance(x, (int, float)) and not math.isnan(x)],
                 dtype=np.float64)
    if v.size == 0:
        return math.nan, math.nan
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0


def summarize(report: ExperimentReport):
    """Per (alpha, method): mean/std of DP and WDs, KS rejection rates.

    Standard deviations use ``ddof=1`` (0 for a single row). Rejection rates
    count only rows where the test was defined; the interval is Wilson's.
    """
    if not report.rows:
        raise ValueError("cannot summarize an empty report")
    order = {m: i for i, m in enumerate(METHODS)}
    groups = {}
    for r in report.rows:
        groups.setdefault((float(r["alpha"]), r["method"]), []).append(r)
    out = []
    for (alpha, method) in sorted(groups, key=lambda k: (k[0], order.get(k[1], 99))):
        rows = groups[(alpha, method)]
        ok = [r for r in rows if r["status"] == "ok"]
        agg = {"alpha": alpha, "method": method, "rows": len(rows),
               "infeasible": len(rows) - len(ok)}
        agg["dp_mean"], agg["dp_std"] = _mean_std(r["dp"] for r in ok)
        for w in ("wd_marginal", "wd_s1", "wd_s0"):
            agg[f"{w}_mean"], agg[f"{w}_std"] = _mean_std(r[w] for r in ok)
        for t in BATTERY_TESTS:
            flags = [int(r[f"rejected_{t}"]) for r in ok if r[f"rejected_{t}"] not in ("", None)]
            n = len(flags)
            hits = sum(flags)
            lo, hi = wilson_interval(hits, n)
            agg[f"reject_rate_{t}"] = hits / n if n else math.nan
            agg[f"reject_lower_{t}"] = lo
            agg[f"reject_upper_{t}"] = hi
            agg[f"reject_halfwidth_{t}"] = (hi - lo) / 2 if n else math.nan
        out.append(agg)
    return out
