"""Experiment drivers: generate, train, evaluate, gridsearch, explain, sensitivity.

Every subcommand is reproducible: the config file plus the seed fully
determine the emitted CSVs. Figures are not rendered; each analysis emits a
plot-ready CSV instead.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import baselines, metrics, ot
from .data import DataError, ObservationalDataset, load_csv, split, write_csv
from .model import estimate_effects, load_checkpoint, predict_outcomes, save_checkpoint
from .synth import SynthConfig, generate
from .training import TrainConfig, train, write_trace_csv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

DEFAULT_GRID = ((0.1, 0.15, 0.2), (0.3, 0.375, 0.45))


class UsageError(ValueError):
    pass


def load_config(path) -> tuple[dict, dict]:
    """Split a flat JSON config into SynthConfig and TrainConfig kwargs."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise UsageError("config must be a flat JSON object")
    synth_keys = {f.name for f in fields(SynthConfig)}
    train_keys = {f.name for f in fields(TrainConfig)}
    synth_cfg, train_cfg = {}, {}
    for key, value in raw.items():
        known = False
        if key in synth_keys:
            synth_cfg[key] = value
            known = True
        if key in train_keys:
            train_cfg[key] = value
            known = True
        if not known:
            raise UsageError(f"unknown config key: {key}")
    return synth_cfg, train_cfg


def _configs(args) -> tuple[SynthConfig, TrainConfig]:
    synth_kwargs, train_kwargs = ({}, {})
    if args.config:
        synth_kwargs, train_kwargs = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        synth_kwargs["seed"] = args.seed
        train_kwargs["seed"] = args.seed
    try:
        return SynthConfig(**synth_kwargs), TrainConfig(**train_kwargs)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid config: {exc}") from exc


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def evaluate_model(model, dataset: ObservationalDataset, idx) -> metrics.MetricsReport:
    """Metrics on a subset; ground-truth metrics only when the dataset has them.

    CSV-borne ground truth carries the two factual-world potential outcomes,
    so PEHE/ATE/ATT are computable; the mediated/direct splits need the cross
    terms and stay unset here.
    """
    idx = np.asarray(idx)
    X, t = dataset.X[idx], dataset.t[idx]
    est = estimate_effects(model, X, t)
    pred_t = predict_outcomes(model, X, "treated", "treated")
    pred_c = predict_outcomes(model, X, "control", "control")
    report = metrics.MetricsReport(policy_risk=metrics.policy_risk(pred_t, pred_c))
    if dataset.has_ground_truth:
        true_ite = dataset.true_ite()[idx]
        report.sqrt_pehe = math.sqrt(metrics.pehe(est.ite, true_ite))
        report.eps_ate = abs(est.ate - float(np.mean(true_ite)))
        if np.any(t == 1):
            report.eps_att = abs(est.att - float(np.mean(true_ite[t == 1])))
    return report


def _train_on(dataset, train_cfg):
    parts = split(dataset.n, train_cfg.seed)
    model, trace = train(dataset, train_cfg, parts.train, parts.validation)
    if any(rec.sinkhorn_residual > train_cfg.sinkhorn_tol for rec in trace):
        print("warning: Sinkhorn hit max_iter before the marginal tolerance "
              "in at least one batch", file=sys.stderr)
    return model, trace, parts


def cmd_generate(args) -> int:
    synth_cfg, _ = _configs(args)
    out = _outdir(args)
    dataset, _ = generate(synth_cfg)
    path = out / "dataset.csv"
    write_csv(path, dataset)
    print(f"wrote {path} ({dataset.n} rows, {dataset.d} covariates)")
    return EXIT_OK


def cmd_train(args) -> int:
    _, train_cfg = _configs(args)
    dataset = load_csv(args.data)
    out = _outdir(args)
    model, trace, _ = _train_on(dataset, train_cfg)
    ckpt = out / "checkpoint.npz"
    save_checkpoint(ckpt, model, train_cfg.to_dict())
    write_trace_csv(out / "trace.csv", trace)
    print(f"wrote {ckpt} and {out / 'trace.csv'}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    _, train_cfg = _configs(args)
    dataset = load_csv(args.data)
    out = _outdir(args)
    model, stored_cfg = load_checkpoint(args.checkpoint)
    seed = train_cfg.seed if args.config or args.seed is not None \
        else int(stored_cfg.get("seed", train_cfg.seed))
    parts = split(dataset.n, seed)
    rows = []
    for scope, idx in (("in_sample", parts.validation), ("out_of_sample", parts.test)):
        if len(idx) == 0:
            continue
        rows.append([scope] + evaluate_model(model, dataset, idx).csv_row())
    path = out / "metrics.csv"
    _write_rows(path, ["scope", *metrics.MetricsReport.FIELDS], rows)
    print(f"wrote {path}")
    return EXIT_OK


def _parse_grid(spec: str):
    try:
        left, right = spec.split("x")
        l1 = tuple(float(v) for v in left.split(","))
        l2 = tuple(float(v) for v in right.split(","))
    except ValueError as exc:
        raise UsageError(f"--grid must look like '0.1,0.2x0.3,0.45': {exc}") from exc
    if not l1 or not l2:
        raise UsageError("--grid needs at least one value per axis")
    return l1, l2


def cmd_gridsearch(args) -> int:
    _, train_cfg = _configs(args)
    dataset = load_csv(args.data)
    out = _outdir(args)
    l1_values, l2_values = _parse_grid(args.grid) if args.grid else DEFAULT_GRID
    rows = []
    best = None  # (val_l_y, lambda1, lambda2); first minimum wins ties
    for lam1 in l1_values:
        for lam2 in l2_values:
            cell = TrainConfig(**{**train_cfg.to_dict(),
                                  "lambda1": lam1, "lambda2": lam2})
            try:
                _, trace, _ = _train_on(dataset, cell)
                val = min(rec.val_l_y for rec in trace)
                rows.append([repr(lam1), repr(lam2), repr(val), "ok"])
                if best is None or val < best[0]:
                    best = (val, lam1, lam2)
            except (FloatingPointError, ot.SinkhornError, ValueError) as exc:
                rows.append([repr(lam1), repr(lam2), "", f"error: {exc}"])
    _write_rows(out / "grid.csv", ["lambda1", "lambda2", "val_l_y", "status"], rows)
    if best is None:
        print("every grid cell failed", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"best cell: lambda1={best[1]} lambda2={best[2]} val_l_y={best[0]}")
    return EXIT_OK


def _trial_effects(dataset, train_cfg, trial_seed):
    cfg = TrainConfig(**{**train_cfg.to_dict(), "seed": trial_seed})
    model, _, _ = _train_on(dataset, cfg)
    est = estimate_effects(model, dataset.X, dataset.t)
    return est.ame, est.ade


def cmd_explain(args) -> int:
    if args.trials < 2:
        raise UsageError("--trials must be at least 2")
    synth_cfg, train_cfg = _configs(args)
    out = _outdir(args)
    source = load_csv(args.data) if args.data else None
    if args.exclude:
        groups = [tuple(g.split(",")) for g in args.exclude]
    else:
        names = source.covariate_names if source is not None \
            else [f"x{j + 1}" for j in range(synth_cfg.d)]
        groups = [(name,) for name in names]

    def dataset_for(trial, drop):
        if source is not None:
            ds = source
        else:
            ds, _ = generate(SynthConfig(**{**synth_cfg.to_dict(),
                                            "seed": synth_cfg.seed + trial}))
        return ds.drop_covariates(drop) if drop else ds

    sample_rows, samples = [], {}
    for label, drop in [("baseline", ())] + [("+".join(g), g) for g in groups]:
        ame_list, ade_list = [], []
        for trial in range(args.trials):
            try:
                ame, ade = _trial_effects(dataset_for(trial, drop), train_cfg,
                                          train_cfg.seed + trial)
            except (FloatingPointError, ot.SinkhornError) as exc:
                sample_rows.append([label, trial, "", "", f"error: {exc}"])
                continue
            ame_list.append(ame)
            ade_list.append(ade)
            sample_rows.append([label, trial, repr(ame), repr(ade), "ok"])
        samples[label] = (ame_list, ade_list)
    _write_rows(out / "explain_samples.csv",
                ["exclude", "trial", "ame", "ade", "status"], sample_rows)

    base_ame, base_ade = samples["baseline"]
    dist_rows = []
    for label, (ame_list, ade_list) in samples.items():
        if label == "baseline" or not ame_list:
            continue
        w_med = ot.wasserstein_1d(base_ame, ame_list)
        w_dir = ot.wasserstein_1d(base_ade, ade_list)
        dist_rows.append([label, repr(w_med), repr(w_dir),
                          repr(w_med * 1e3), repr(w_dir * 1e3)])
    _write_rows(out / "explain_distances.csv",
                ["exclude", "w1_mediate", "w1_direct",
                 "w1_mediate_x1000", "w1_direct_x1000"], dist_rows)
    print(f"wrote {out / 'explain_samples.csv'} and {out / 'explain_distances.csv'}")
    return EXIT_OK


def cmd_sensitivity(args) -> int:
    synth_cfg, train_cfg = _configs(args)
    out = _outdir(args)
    rhos = sorted(set(args.rho if args.rho else [0.0]))
    if any(abs(r) > 1 for r in rhos):
        raise UsageError("every --rho must lie in [-1, 1]")
    sample_rows, summary_rows = [], []
    for rho in rhos:
        ame_list, ade_list = [], []
        true_ame = None
        for trial in range(args.trials):
            cfg = SynthConfig(**{**synth_cfg.to_dict(), "rho": rho,
                                 "seed": synth_cfg.seed + trial})
            dataset, truth = generate(cfg)
            true_ame = truth.ame(dataset.t)
            try:
                ame, ade = _trial_effects(dataset, train_cfg, train_cfg.seed + trial)
            except (FloatingPointError, ot.SinkhornError) as exc:
                sample_rows.append([repr(rho), trial, "", "", f"error: {exc}"])
                continue
            ame_list.append(ame)
            ade_list.append(ade)
            sample_rows.append([repr(rho), trial, repr(ame), repr(ade), "ok"])
        if ame_list:
            summary_rows.append([
                repr(rho), repr(true_ame),
                repr(float(np.mean(ame_list))), repr(float(np.std(ame_list))),
                repr(float(np.min(ame_list))), repr(float(np.max(ame_list))),
                repr(float(np.mean(ade_list))), repr(float(np.std(ade_list))),
                len(ame_list)])
        else:
            summary_rows.append([repr(rho), repr(true_ame),
                                 "", "", "", "", "", "", 0])
    _write_rows(out / "sensitivity_samples.csv",
                ["rho", "trial", "ame", "ade", "status"], sample_rows)
    _write_rows(out / "sensitivity.csv",
                ["rho", "true_ame", "ame_mean", "ame_std", "ame_min", "ame_max",
                 "ade_mean", "ade_std", "n_trials"], summary_rows)
    print(f"wrote {out / 'sensitivity.csv'}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dtanet",
                     description="Treatment-adaptive network experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=False, checkpoint=False):
        p.add_argument("--config", help="flat JSON config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="override the config seed")
        if data:
            p.add_argument("--data", help="dataset CSV path")
        if checkpoint:
            p.add_argument("--checkpoint", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset CSV")
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train a model, write checkpoint + trace")
    common(p, data=True)
    p.set_defaults(func=cmd_train, require_data=True)

    p = sub.add_parser("evaluate", help="metrics on validation and test splits")
    common(p, data=True, checkpoint=True)
    p.set_defaults(func=cmd_evaluate, require_data=True)

    p = sub.add_parser("gridsearch", help="grid over (lambda1, lambda2)")
    common(p, data=True)
    p.add_argument("--grid", help="grid spec like '0.1,0.2x0.3,0.45'")
    p.set_defaults(func=cmd_gridsearch, require_data=True)

    p = sub.add_parser("explain", help="covariate-exclusion effect distributions")
    common(p, data=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--exclude", action="append",
                   help="covariate name(s) to drop jointly, comma-separated; repeatable")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("sensitivity", help="effect-vs-rho robustness sweep")
    common(p)
    p.add_argument("--rho", action="append", type=float,
                   help="noise correlation; repeatable")
    p.add_argument("--trials", type=int, default=20)
    p.set_defaults(func=cmd_sensitivity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "require_data", False) and not args.data:
        print("error: --data is required for this subcommand", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ot.SinkhornError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
