"""Command-line entry point: ``stealthbias <command> [options]``.

Exit codes: 0 success, 2 config or schema error, 3 infeasible bin counts,
4 convergence failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .data import ColumnSchema, load_dataset, save_dataset
from .detect import bound_terms, run_detector_battery
from .errors import ConvergenceError, InfeasibleError, SchemaError
from .experiment import (SUMMARY_COLUMNS, ExperimentConfig, load_config, run_experiment,
                         summarize, write_rows)
from .fairness import demographic_parity, target_bin_counts
from .sampler import (StealthPlan, baseline_random_sample, bootstrap_stealth_measure,
                      case_control_sample, draw_sample, stealth_measure, write_plan_csv,
                      write_sample_csv)
from .data import WeightedMeasure
from .synthetic import GeneratorConfig, generate
from .transport import GroundCost, empirical_wd

EXIT_OK, EXIT_SCHEMA, EXIT_INFEASIBLE, EXIT_CONVERGENCE = 0, 2, 3, 4


def _seed(text):
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _base_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return cfg


def _schema(cfg):
    return ColumnSchema(cfg.features, cfg.sensitive_column, cfg.decision_column)


def cmd_generate(args):
    cfg = _base_config(args)
    seed = args.seed if args.seed is not None else cfg.seed
    n = args.n if args.n is not None else cfg.n
    data = generate(GeneratorConfig(n=n, d=cfg.d, b=cfg.b, mode=cfg.mode,
                                    group_probability=cfg.group_probability
                                    if cfg.group_probability != "auto" else 0.5,
                                    seed=seed))
    save_dataset(data, args.out)
    print(f"wrote {data.n} records to {args.out}")


def cmd_sample(args):
    cfg = _base_config(args)
    data = load_dataset(args.data, _schema(cfg))
    seed = args.seed if args.seed is not None else cfg.seed
    k = args.k if args.k is not None else cfg.k
    alpha = args.alpha if args.alpha is not None else cfg.alphas[0]
    method = args.method
    probs = cfg.group_probability
    if probs == "auto":
        counts = np.bincount(data.sensitive, minlength=data.num_sensitive_classes)
        probs = list(counts / counts.sum())
    spec = target_bin_counts(k, alpha, probs)
    cost = cfg.ground_cost
    if method == "stealth":
        if cfg.bootstrap_subset:
            plan = bootstrap_stealth_measure(data, spec, cost, cfg.bootstrap_subset,
                                             cfg.bootstrap_rounds, seed=seed)
        else:
            plan = stealth_measure(data, spec, cost)
        draw = draw_sample(data, plan, seed=seed)
    else:
        if method == "case_control":
            draw = case_control_sample(data, spec, seed=seed)
            w = np.zeros(data.n)
            for b, (s, y) in enumerate(data.bin_labels):
                inside = (data.sensitive == s) & (data.decision == y)
                if inside.any():
                    w[inside] = spec.as_array(data.num_sensitive_classes)[b] / inside.sum()
        else:
            draw = baseline_random_sample(data, k, seed=seed)
            w = np.full(data.n, k / data.n)
        plan = StealthPlan(WeightedMeasure(w), spec if method == "case_control" else None,
                           float("nan"), data.n)
    write_sample_csv(draw, args.out)
    mu_path = args.mu_out or str(Path(args.out).with_suffix("")) + "_mu.csv"
    write_plan_csv(plan, mu_path)
    print(f"method={method} alpha={alpha} k={k} drawn={len(draw)} "
          f"dp={demographic_parity(data, draw):.6g} objective={plan.objective:.6g}")
    print(f"indices -> {args.out}; mu -> {mu_path}")


def cmd_audit(args):
    cfg = _base_config(args)
    disclosed = load_dataset(args.disclosed, _schema(cfg))
    reference = load_dataset(args.reference, _schema(cfg))
    rows = []
    for v in run_detector_battery(disclosed, reference, cfg.key_feature, cfg.significance):
        rows.append({"test": v.name, "statistic": v.statistic, "pvalue": v.threshold_or_pvalue,
                     "rejected": int(v.rejected) if v.defined else ""})
        state = "undefined" if not v.defined else ("REJECT" if v.rejected else "pass")
        print(f"{v.name:>8}: D={v.statistic:.4f} p={v.threshold_or_pvalue:.4g} {state}")
    cost = cfg.ground_cost
    wd = empirical_wd(disclosed, reference, cost)
    print(f"wd_marginal: {wd:.6g}")
    rows.append({"test": "wd_marginal", "statistic": wd, "pvalue": "", "rejected": ""})
    if args.out:
        write_rows(rows, ["test", "statistic", "pvalue", "rejected"], args.out)


def cmd_experiment(args):
    cfg = _base_config(args)
    if args.seed is not None:
        from dataclasses import replace
        cfg = replace(cfg, seed=args.seed)
    report = run_experiment(cfg)
    report.to_csv(args.out)
    summary = summarize(report)
    summary_path = args.summary or str(Path(args.out).with_suffix("")) + "_summary.csv"
    write_rows(summary, SUMMARY_COLUMNS, summary_path)
    print(f"{len(report.rows)} rows ({report.infeasible_count} infeasible) -> {args.out}")
    print(f"summary -> {summary_path}")


def cmd_bound(args):
    first, second = bound_terms(args.wasserstein, args.k, args.s, args.c, args.tv)
    print(f"transport_term={first!r}")
    print(f"combinatorial_term={second!r}")
    print(f"bound={first + second!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stealthbias",
                                description="Stealthily biased sampling and its detection.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=True):
        sp.add_argument("--config", help="flat key=value experiment config")
        sp.add_argument("--seed", type=_seed, help="master seed (overrides config)")
        sp.add_argument("--out", required=out_required, help="output CSV path")

    g = sub.add_parser("generate", help="write a synthetic dataset")
    common(g)
    g.add_argument("--n", type=int, help="number of records")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("sample", help="draw one disclosed subset")
    common(s)
    s.add_argument("--data", required=True, help="dataset CSV")
    s.add_argument("--method", choices=("stealth", "case_control", "baseline_random"),
                   default="stealth")
    s.add_argument("--alpha", type=float, help="target positive rate")
    s.add_argument("--k", type=int, help="sample size")
    s.add_argument("--mu-out", help="where to write the sampling weights")
    s.set_defaults(func=cmd_sample)

    a = sub.add_parser("audit", help="KS battery between two datasets")
    common(a, out_required=False)
    a.add_argument("--disclosed", required=True)
    a.add_argument("--reference", required=True)
    a.set_defaults(func=cmd_audit)

    e = sub.add_parser("experiment", help="full alpha x method x repetition sweep")
    common(e)
    e.add_argument("--summary", help="aggregate CSV path")
    e.set_defaults(func=cmd_experiment)

    b = sub.add_parser("bound", help="advantage bound for a KS-threshold detector")
    b.add_argument("--wasserstein", type=float, required=True)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--s", type=float, required=True)
    b.add_argument("--c", type=float, required=True)
    b.add_argument("--tv", type=float, required=True)
    b.set_defaults(func=cmd_bound)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
