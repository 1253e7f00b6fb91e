"""Command-line front end.

Exit codes: 0 success, 1 validation error, 2 numerical failure, 3 I/O
error.  The master seed can be set via SYNCPROBE_SEED; an explicit --seed
flag wins over the environment.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import DatasetConfig, generate, load, save, split
from .errors import (
    DataFormatError,
    NumericalError,
    SyncprobeError,
    ValidationError,
)
from .experiments import EXPERIMENTS, ExperimentSpec, run_experiment, write_csv
from .mlp import (
    TrainConfig,
    classify_error,
    init_model,
    load_model,
    regress_nme,
    save_model,
    train,
)
from .quantum import (
    GRID_DENSE,
    GRID_FEATURES,
    ProbeSetup,
    build_liouvillian,
    plus_plus_state,
    propagate,
    sync_boundary_omega_p,
)
from .sync import classify_sync, pearson_windowed
from .dataset import standardize

ENV_SEED = "SYNCPROBE_SEED"


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with code 2
        raise ValidationError(message)


def _default_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(ENV_SEED)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ValidationError(f"{ENV_SEED} must be an integer, got {env!r}") from exc
    return 0


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON config ({exc})") from exc
    if not isinstance(cfg, dict):
        raise DataFormatError(f"{path}: config must be a JSON object")
    return cfg


def _experiment_spec(args, experiment: str, overrides: dict) -> ExperimentSpec:
    seed = _default_seed(args)
    seeds = tuple(range(seed, seed + args.n_seeds))
    return ExperimentSpec(
        experiment=experiment,
        overrides=overrides,
        seeds=seeds,
        out_dir=Path(args.out_dir),
        jobs=args.jobs,
    )


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated floats, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="syncprobe", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file with parameter overrides")
    common.add_argument("--seed", type=int, default=None, help="master seed")
    common.add_argument("--n-seeds", type=int, default=5,
                        help="number of consecutive seeds for sweeps")
    common.add_argument("--out-dir", default="results", help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers")
    common.add_argument("--format", default="csv", choices=["csv"],
                        help="output format (csv only)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common],
                       help="propagate one setup and report the sync verdict")
    p.add_argument("--omega-p", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--gamma0", type=float, default=0.01)
    p.add_argument("--lam", type=float, default=0.2)
    p.add_argument("--dense", action="store_true",
                   help="use the 1001-point diagnostic grid")
    p.add_argument("--out", default=None, help="trajectory CSV path")

    p = sub.add_parser("boundary", parents=[common],
                       help="tabulate the no-synchronization boundary")
    p.add_argument("--lam", type=float, default=0.2)
    p.add_argument("--s-min", type=float, default=0.5)
    p.add_argument("--s-max", type=float, default=2.0)
    p.add_argument("--s-count", type=int, default=31)
    p.add_argument("--out", default=None, help="boundary CSV path")

    sub.add_parser("phase-map", parents=[common],
                   help="Pearson |C| map over the omega_p-s plane")

    p = sub.add_parser("dataset", parents=[common],
                       help="generate and save a labeled spectrum dataset")
    p.add_argument("--out", required=True, help="dataset CSV path")
    p.add_argument("--omega-p-range", type=_float_list, default=(0.9, 1.15))
    p.add_argument("--omega-p-count", type=int, default=100)
    p.add_argument("--s-values", type=_float_list, default=(0.5, 1.0, 2.0))
    p.add_argument("--gamma0-values", type=_float_list, default=(0.01,))
    p.add_argument("--lam", type=float, default=0.2)
    p.add_argument("--noise-pct", type=float, default=0.0)
    p.add_argument("--replicates", type=int, default=1)

    p = sub.add_parser("train", parents=[common],
                       help="train a model on a saved dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--target", default="s", choices=["s", "gamma0"])
    p.add_argument("--head", default="classification",
                   choices=["classification", "regression"])
    p.add_argument("--hidden", type=int, default=50)
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--train-fraction", type=float, default=None)

    p = sub.add_parser("evaluate", parents=[common],
                       help="score a saved model on a saved dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--target", default="s", choices=["s", "gamma0"])

    p = sub.add_parser("sweep", parents=[common],
                       help="run an experiment described by --config")
    p.add_argument("--experiment", required=True, choices=EXPERIMENTS)

    p = sub.add_parser("reproduce", parents=[common],
                       help="rebuild one figure's result files")
    p.add_argument("figure", choices=["fig2", "fig3", "fig4", "fig5", "fig6"])
    return parser


_FIGURE_EXPERIMENTS = {
    "fig2": "fig2",
    "fig3": "fig3_classification",
    "fig4": "fig4_regression",
    "fig5": "fig5_regression_vs_s",
    "fig6": "fig6_noise",
}


def _cmd_simulate(args) -> int:
    setup = ProbeSetup(omega_p=args.omega_p, lam=args.lam, gamma0=args.gamma0, s=args.s)
    grid = GRID_DENSE if args.dense else GRID_FEATURES
    traj_q, traj_p = propagate(build_liouvillian(setup), plus_plus_state(), grid)
    window = grid.t_final / 2.0
    c = pearson_windowed(traj_q, traj_p, grid.t_final, window)
    verdict = classify_sync(c)
    print(f"C(t={grid.t_final}, dt={window}) = {c:+.6f} -> {verdict.phase.value}")
    if args.out:
        rows = list(zip(traj_q.times, traj_q.values, traj_p.values))
        write_csv(Path(args.out), {"omega_p": args.omega_p, "s": args.s,
                                   "gamma0": args.gamma0, "lam": args.lam},
                  ["t", "sx_system", "sx_probe"], rows)
        print(f"wrote {args.out}")
    return 0


def _cmd_boundary(args) -> int:
    rows = []
    for s in np.linspace(args.s_min, args.s_max, args.s_count):
        omega = sync_boundary_omega_p(float(s), args.lam)
        rows.append((float(s), omega))
        print(f"s = {s:.4f}  omega_p* = {omega:.6f}")
    if args.out:
        write_csv(Path(args.out), {"lam": args.lam}, ["s", "omega_p_boundary"], rows)
        print(f"wrote {args.out}")
    return 0


def _cmd_dataset(args) -> int:
    config = DatasetConfig(
        omega_p_interval=tuple(args.omega_p_range),
        omega_p_count=args.omega_p_count,
        s_values=tuple(args.s_values),
        gamma0_values=tuple(args.gamma0_values),
        lam=args.lam,
        noise_pct=args.noise_pct,
        replicates=args.replicates,
        master_seed=_default_seed(args),
    )
    ds = generate(config, jobs=args.jobs)
    save(ds, args.out)
    print(f"wrote {len(ds)} examples to {args.out}")
    return 0


def _cmd_train(args) -> int:
    ds = load(args.dataset)
    train_ds, test_ds = split(
        ds, train_fraction=args.train_fraction, seed=_default_seed(args),
        stratify_by=args.target if args.head == "classification" else None,
    )
    x_tr, x_te, _ = standardize(train_ds.features(), test_ds.features())
    y_tr = train_ds.label_array(args.target)
    y_te = test_ds.label_array(args.target)
    cfg = TrainConfig(hidden=args.hidden, epochs=args.epochs,
                      batch_size=args.batch_size, seed=_default_seed(args))
    n_out = 1 if args.head == "regression" else len(np.unique(y_tr))
    model = init_model(x_tr.shape[1], cfg.hidden, args.head, cfg.seed, n_out)
    model, history = train(model, x_tr, y_tr, cfg)
    save_model(model, args.model_out)
    if args.head == "classification":
        metric = f"P = {classify_error(model, x_te, y_te):.4f}"
    else:
        metric = f"NME = {regress_nme(model, x_te, y_te):.4f}"
    print(f"trained {len(history)} epochs, final loss {history[-1]:.6g}, held-out {metric}")
    print(f"wrote {args.model_out}")
    return 0


def _cmd_evaluate(args) -> int:
    ds = load(args.dataset)
    model = load_model(args.model)
    x = ds.features()
    mean = x.mean(axis=0)  # standalone evaluation standardizes on itself
    std = np.where(x.std(axis=0) == 0, 1.0, x.std(axis=0))
    xs = (x - mean) / std
    y = ds.label_array(args.target)
    if model.head == "classification":
        print(f"P = {classify_error(model, xs, y):.4f} on {len(ds)} examples")
    else:
        print(f"NME = {regress_nme(model, xs, y):.4f} on {len(ds)} examples")
    return 0


def _cmd_experiment(args, experiment: str) -> int:
    overrides = _load_config(getattr(args, "config", None))
    spec = _experiment_spec(args, experiment, overrides)
    run_experiment(spec)
    print(f"{experiment}: results in {spec.out_dir} (spec {spec.spec_hash()})")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "boundary":
            return _cmd_boundary(args)
        if args.command == "phase-map":
            return _cmd_experiment(args, "phase_map")
        if args.command == "dataset":
            return _cmd_dataset(args)
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "evaluate":
            return _cmd_evaluate(args)
        if args.command == "sweep":
            return _cmd_experiment(args, args.experiment)
        if args.command == "reproduce":
            return _cmd_experiment(args, _FIGURE_EXPERIMENTS[args.figure])
        raise ValidationError(f"unknown command {args.command!r}")
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (DataFormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except SyncprobeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
