"""Command line entry point.

Subcommands:
  simulate    regression benchmark on one of the six simulated targets
  classify    binary classification on a CSV file or the quadratic toy model
  theory      run a bound verifier and emit its report as JSON
  calibrate   print the signal-scale constant for a simulated target

A JSON config file can seed any experiment; explicit flags override file
values.  ``CLIPNET_THREADS`` caps replicate parallelism and
``CLIPNET_BACKEND`` selects the numba or numpy kernels.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import activations, datagen, theory
from .harness import ExperimentConfig, run_experiment


def _add_common_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file with ExperimentConfig fields")
    p.add_argument("--n", type=int, dest="n_train", help="training sample size")
    p.add_argument("--replicates", type=int, dest="n_replicates")
    p.add_argument("--estimators", type=str,
                   help="comma separated subset of sdnn,nsdnn,knn")
    p.add_argument("--out", type=str, dest="out_dir", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--test-size", type=int, dest="test_size")
    p.add_argument("--outer-iters", type=int, dest="outer_iters")
    p.add_argument("--adam-steps", type=int, dest="adam_steps")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--hidden", type=str, dest="hidden_widths",
                   help="comma separated hidden widths, e.g. 100,100")
    p.add_argument("--activation", type=str)
    p.add_argument("--lambda-grid", type=str, dest="lambda_grid",
                   help="comma separated penalty strengths")
    p.add_argument("--tau-grid", type=str, dest="tau_grid",
                   help="comma separated clipping thresholds")
    p.add_argument("--k-grid", type=str, dest="k_grid",
                   help="comma separated neighbour counts")
    p.add_argument("--write-traces", action="store_true", default=None)


def _collect_overrides(args: argparse.Namespace, extra: dict) -> dict:
    values = dict(extra)
    passthrough = ("n_train", "n_replicates", "out_dir", "seed", "test_size",
                   "outer_iters", "adam_steps", "learning_rate", "batch_size",
                   "activation", "write_traces")
    for name in passthrough:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    if getattr(args, "estimators", None):
        values["estimators"] = tuple(args.estimators.split(","))
    if getattr(args, "hidden_widths", None):
        values["hidden_widths"] = tuple(int(w) for w in args.hidden_widths.split(","))
    if getattr(args, "lambda_grid", None):
        values["lambda_grid"] = tuple(float(v) for v in args.lambda_grid.split(","))
    if getattr(args, "tau_grid", None):
        values["tau_grid"] = tuple(float(v) for v in args.tau_grid.split(","))
    if getattr(args, "k_grid", None):
        values["k_grid"] = tuple(int(v) for v in args.k_grid.split(","))
    return values


def _build_config(args: argparse.Namespace, extra: dict) -> ExperimentConfig:
    base = {}
    if getattr(args, "config", None):
        base = json.loads(Path(args.config).read_text())
    base.update(_collect_overrides(args, extra))
    return ExperimentConfig.from_dict(base)


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _build_config(args, {
        "task": "regression-sim",
        "generator": args.function,
    })
    records = run_experiment(cfg)
    print(f"wrote {len(records)} records to {Path(cfg.out_dir) / 'records.csv'}")
    summary = json.loads((Path(cfg.out_dir) / "summary.json").read_text())
    for estimator, stats in summary.items():
        line = f"  {estimator}: metric {stats['metric_mean']:.4g} (sd {stats['metric_sd']:.3g})"
        if "sparsity_mean" in stats:
            line += f", sparsity {stats['sparsity_mean']:.3f}"
        print(line)
    return 0


def _cmd_classify(args: argparse.Namespace) -> int:
    if args.csv is not None:
        extra = {"task": "classification-csv", "csv_path": str(args.csv),
                 "label_column": args.label}
        if args.label is None:
            print("error: --label is required with --csv", file=sys.stderr)
            return 2
    else:
        extra = {"task": "classification-toy", "toy_dim": args.toy_dim}
    cfg = _build_config(args, extra)
    records = run_experiment(cfg)
    print(f"wrote {len(records)} records to {Path(cfg.out_dir) / 'records.csv'}")
    summary = json.loads((Path(cfg.out_dir) / "summary.json").read_text())
    for estimator, stats in summary.items():
        print(f"  {estimator}: accuracy {stats['metric_mean']:.4f} (sd {stats['metric_sd']:.3g})")
    return 0


def _cmd_theory(args: argparse.Namespace) -> int:
    if args.check == "lipschitz":
        spec = theory.MlpSpec(args.dim, tuple([args.width] * args.depth),
                              activation=activations.relu())
        report = theory.verify_lipschitz(spec, args.bound, args.trials,
                                         args.grid_size, args.seed)
        payload = {"check": "lipschitz", **dataclasses.asdict(report)}
    elif args.check == "covering":
        params = theory.ClassParams(L=args.depth, N=args.width, B=args.bound,
                                    S=args.sparsity_budget, delta=args.delta,
                                    tau=args.tau)
        plain = theory.covering_bound(params)
        payload = {
            "check": "covering",
            "plain": {"value": plain.value, "vacuous": plain.vacuous},
        }
        if args.tau > 0:
            clipped = theory.covering_bound_clipped(params)
            payload["clipped"] = {"value": clipped.value, "vacuous": clipped.vacuous}
    else:
        built = theory.identity_net(args.delta_margin, args.epsilon,
                                    activations.by_name(args.activation))
        payload = {
            "check": "identity",
            "activation": args.activation,
            "scale": built.scale,
            "c1": built.c1,
            "t": built.t,
            "sup_error": built.sup_error,
            "epsilon": built.epsilon,
        }
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def _cmd_calibrate(args: argparse.Namespace) -> int:
    m = int(args.function.lstrip("f"))
    c = datagen.calibrate_constant(m, args.samples, args.seed)
    ratio = datagen.noise_variance_ratio(m, args.samples, args.seed)
    print(json.dumps({"function": f"f{m}", "c_m": c,
                      "noise_variance_ratio": ratio}, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clipnet", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="simulated regression benchmark")
    p_sim.add_argument("--function", default="f1", choices=[f"f{m}" for m in range(1, 7)])
    _add_common_experiment_flags(p_sim)
    p_sim.set_defaults(func=_cmd_simulate)

    p_cls = sub.add_parser("classify", help="binary classification benchmark")
    p_cls.add_argument("--csv", type=Path, help="input CSV file")
    p_cls.add_argument("--label", type=str, help="label column name")
    p_cls.add_argument("--toy-dim", type=int, default=5,
                       help="dimension for the simulated toy model (without --csv)")
    _add_common_experiment_flags(p_cls)
    p_cls.set_defaults(func=_cmd_classify)

    p_thy = sub.add_parser("theory", help="run a bound verifier, emit JSON")
    p_thy.add_argument("--check", required=True,
                       choices=["lipschitz", "covering", "identity"])
    p_thy.add_argument("--dim", type=int, default=2)
    p_thy.add_argument("--depth", type=int, default=2)
    p_thy.add_argument("--width", type=int, default=4)
    p_thy.add_argument("--bound", type=float, default=1.0)
    p_thy.add_argument("--trials", type=int, default=100)
    p_thy.add_argument("--grid-size", type=int, default=10_000)
    p_thy.add_argument("--sparsity-budget", type=float, default=10.0)
    p_thy.add_argument("--delta", type=float, default=1.0)
    p_thy.add_argument("--tau", type=float, default=0.0)
    p_thy.add_argument("--delta-margin", type=float, default=0.0)
    p_thy.add_argument("--epsilon", type=float, default=1e-2)
    p_thy.add_argument("--activation", type=str, default="sigmoid")
    p_thy.add_argument("--seed", type=int, default=0)
    p_thy.add_argument("--out", type=str)
    p_thy.set_defaults(func=_cmd_theory)

    p_cal = sub.add_parser("calibrate", help="signal-scale constant for a target")
    p_cal.add_argument("--function", default="f1", choices=[f"f{m}" for m in range(1, 7)])
    p_cal.add_argument("--samples", type=int, default=1_000_000)
    p_cal.add_argument("--seed", type=int, default=0)
    p_cal.set_defaults(func=_cmd_calibrate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
