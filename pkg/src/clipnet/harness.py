"""Experiment orchestration: tuning, replication, metrics, serialization.

A run draws (or splits) a dataset per replicate, holds out one fifth of the
training rows for validation, fits every requested estimator over its
hyperparameter grid, keeps the grid point with the best validation score
(first in grid order on ties, no refit on the full training set), and
evaluates the winner on held-out or freshly simulated test data.  Records
land in ``records.csv`` with a ``summary.json`` of per-estimator means and
standard deviations.

Replicates run as independent tasks in a thread pool (``CLIPNET_THREADS``
caps the width); results are merged in (replicate, estimator) order so the
output files are byte-identical across schedules, timing column aside.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import activations, losses
from .baselines import knn_fit, knn_predict_batch
from .datagen import (
    Dataset,
    empirical_l2_error,
    gen_classification_toy,
    gen_regression,
)
from .network import MlpSpec, forward_batch
from .optimizer import FitReport, OptimizerConfig, adam_fit, fit, sparsity
from .penalty import PenaltyConfig

ESTIMATORS = ("sdnn", "nsdnn", "knn")
TASKS = ("regression-sim", "classification-toy", "classification-csv")

_DEFAULT_LAMBDA_MULTIPLIERS = (1e-5, 1e-4, 1e-3, 1e-2)


def lambda_anchor(n: int) -> float:
    """Penalty scale log(n)^5 / n that the default grid is centered on."""
    return math.log(n) ** 5 / n


def default_lambda_grid(n: int) -> tuple[float, ...]:
    anchor = lambda_anchor(n)
    return tuple(m * anchor for m in _DEFAULT_LAMBDA_MULTIPLIERS)


@dataclass
class ExperimentConfig:
    task: str = "regression-sim"
    generator: str = "f1"
    toy_dim: int = 5
    csv_path: str | None = None
    label_column: str | None = None
    n_train: int = 200
    n_replicates: int = 10
    estimators: tuple[str, ...] = ESTIMATORS
    lambda_grid: tuple[float, ...] | None = None
    tau_grid: tuple[float, ...] = (1e-3, 1e-2, 1e-1)
    k_grid: tuple[int, ...] = (1, 3, 5, 7, 11, 15, 21, 31, 51)
    hidden_widths: tuple[int, ...] = (100, 100, 100, 100, 100)
    activation: str = "relu"
    seed: int = 0
    test_size: int = 100_000
    out_dir: str = "results"
    write_traces: bool = False
    learning_rate: float = 1e-2
    max_inner_steps: int = 5
    outer_iters: int = 500
    batch_size: int | None = None
    monotone_policy: str = "strict"
    early_stop_patience: int | None = 20
    early_stop_rel_tol: float = 1e-8
    adam_lr: float = 1e-3
    adam_steps: int = 3000

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}")
        self.estimators = tuple(e.strip().lower() for e in self.estimators)
        unknown = set(self.estimators) - set(ESTIMATORS)
        if not self.estimators or unknown:
            raise ValueError(f"estimators must be a nonempty subset of {ESTIMATORS}")
        if self.n_train < 10:
            raise ValueError("n_train must be at least 10")
        if self.n_replicates < 1:
            raise ValueError("n_replicates must be at least 1")
        if "sdnn" in self.estimators:
            if self.lambda_grid is not None and not self.lambda_grid:
                raise ValueError("lambda_grid must be nonempty")
            if not self.tau_grid:
                raise ValueError("tau_grid must be nonempty")
        if "knn" in self.estimators and not self.k_grid:
            raise ValueError("k_grid must be nonempty")
        if self.task == "classification-csv" and (self.csv_path is None or self.label_column is None):
            raise ValueError("classification-csv needs csv_path and label_column")

    @property
    def is_classification(self) -> bool:
        return self.task != "regression-sim"

    def resolved_lambda_grid(self) -> tuple[float, ...]:
        if self.lambda_grid is not None:
            return tuple(self.lambda_grid)
        return default_lambda_grid(self.n_train)

    def mlp_spec(self, input_dim: int) -> MlpSpec:
        return MlpSpec(input_dim, tuple(self.hidden_widths),
                       activation=activations.by_name(self.activation))

    @classmethod
    def from_dict(cls, values: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        converted = dict(values)
        for key in ("estimators", "lambda_grid", "tau_grid", "k_grid", "hidden_widths"):
            if key in converted and converted[key] is not None:
                converted[key] = tuple(converted[key])
        return cls(**converted)


@dataclass
class ResultRecord:
    replicate: int
    estimator: str
    lam: float | None
    tau: float | None
    k: int | None
    metric: float
    sparsity: float | None
    seconds: float


@dataclass
class FittedModel:
    """A tuned estimator with a batch predictor and its chosen grid point."""

    estimator: str
    predict: callable
    hyperparams: dict
    sparsity: float | None = None
    report: FitReport | None = None


def worker_count() -> int:
    env = os.environ.get("CLIPNET_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return max(1, min(4, os.cpu_count() or 1))


def split_validation(data: Dataset, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint random split with a validation share of one fifth."""
    n = data.n
    if n < 10:
        raise ValueError("need at least 10 rows to split off a validation fifth")
    n_val = n // 5
    perm = np.random.default_rng(seed).permutation(n)
    return data.subset(perm[n_val:]), data.subset(perm[:n_val])


def _net_predictor(theta, spec):
    def predict(X):
        return forward_batch(theta, spec, np.ascontiguousarray(X, dtype=np.float64))
    return predict


def _as_labels(values: np.ndarray) -> np.ndarray:
    return np.where(values >= 0, 1.0, -1.0)


def _validation_score(predict, val: Dataset, classification: bool) -> float:
    """Lower is better: MSE for regression, error rate for classification."""
    preds = predict(val.inputs)
    if classification:
        return float(np.mean(_as_labels(preds) != val.targets))
    return float(np.mean((preds - val.targets) ** 2))


def _fit_one(estimator: str, point: dict, train: Dataset, cfg: ExperimentConfig,
             seed: int) -> FittedModel:
    classification = cfg.is_classification
    loss = losses.LOGISTIC if classification else losses.SQUARE
    if estimator == "sdnn":
        spec = cfg.mlp_spec(train.dim)
        opt = OptimizerConfig(
            learning_rate=cfg.learning_rate, max_inner_steps=cfg.max_inner_steps,
            outer_iters=cfg.outer_iters, batch_size=cfg.batch_size,
            monotone_policy=cfg.monotone_policy, seed=seed,
            early_stop_patience=cfg.early_stop_patience,
            early_stop_rel_tol=cfg.early_stop_rel_tol,
        )
        report = fit(train, spec, loss, PenaltyConfig(point["lam"], point["tau"]), opt)
        base = _net_predictor(report.final_theta, spec)
        predict = (lambda X: _as_labels(base(X))) if classification else base
        return FittedModel("sdnn", predict, dict(point),
                           sparsity=sparsity(report.final_theta), report=report)
    if estimator == "nsdnn":
        spec = cfg.mlp_spec(train.dim)
        opt = OptimizerConfig(learning_rate=cfg.adam_lr, outer_iters=cfg.adam_steps,
                              batch_size=cfg.batch_size, seed=seed)
        report = adam_fit(train, spec, loss, opt)
        base = _net_predictor(report.final_theta, spec)
        predict = (lambda X: _as_labels(base(X))) if classification else base
        return FittedModel("nsdnn", predict, {}, report=report)
    if estimator == "knn":
        task = "classification" if classification else "regression"
        model = knn_fit(train, point["k"], task)
        return FittedModel("knn", lambda X, m=model: knn_predict_batch(m, X), dict(point))
    raise ValueError(f"unknown estimator '{estimator}'")


def _grid_points(estimator: str, grids: dict, n_train: int) -> list[dict]:
    if estimator == "sdnn":
        return [{"lam": lam, "tau": tau} for lam in grids["lam"] for tau in grids["tau"]]
    if estimator == "knn":
        ks = [k for k in grids["k"] if 1 <= k <= n_train]
        if not ks:
            raise ValueError("no admissible k in the grid for this training size")
        return [{"k": int(k)} for k in ks]
    return [{}]


def tune_and_fit(data: Dataset, estimator: str, grids: dict, cfg: ExperimentConfig,
                 seed: int = 0) -> tuple[FittedModel, dict]:
    """Grid search scored on the held-out fifth; first grid point wins ties.

    The returned model is the one trained on the four-fifths portion; no
    refit on the full data is performed.
    """
    train, val = split_validation(data, seed)
    points = _grid_points(estimator, grids, train.n)
    best: FittedModel | None = None
    best_score = math.inf
    errors: list[str] = []
    for point in points:
        try:
            model = _fit_one(estimator, point, train, cfg, seed)
        except Exception as err:  # noqa: BLE001 - aggregated and re-raised below
            errors.append(f"{point}: {type(err).__name__}: {err}")
            continue
        score = _validation_score(model.predict, val, cfg.is_classification)
        if score < best_score:
            best, best_score = model, score
    if best is None:
        raise RuntimeError(
            "every grid point failed:\n  " + "\n  ".join(errors)
        )
    return best, best.hyperparams


def _train_test_for_replicate(cfg: ExperimentConfig, rep: int, full: Dataset | None):
    seed = cfg.seed + rep
    if cfg.task == "regression-sim":
        m = int(cfg.generator.lstrip("f"))
        return gen_regression(m, cfg.n_train, seed), None
    if cfg.task == "classification-toy":
        return gen_classification_toy(cfg.toy_dim, cfg.n_train, seed), None
    n = full.n
    n_train = round(0.7 * n)
    perm = np.random.default_rng(seed).permutation(n)
    return full.subset(perm[:n_train]), full.subset(perm[n_train:])


def _test_metric(cfg: ExperimentConfig, model: FittedModel, rep: int,
                 test: Dataset | None) -> float:
    if cfg.task == "regression-sim":
        m = int(cfg.generator.lstrip("f"))
        return empirical_l2_error(model.predict, m, cfg.test_size, cfg.seed + 30_000 + rep)
    if cfg.task == "classification-toy":
        test = gen_classification_toy(cfg.toy_dim, cfg.test_size, cfg.seed + 30_000 + rep)
    preds = model.predict(test.inputs)
    return float(np.mean(preds == test.targets))


def _run_replicate(cfg: ExperimentConfig, rep: int, full: Dataset | None):
    grids = {"lam": cfg.resolved_lambda_grid(), "tau": cfg.tau_grid, "k": cfg.k_grid}
    data, test = _train_test_for_replicate(cfg, rep, full)
    split_seed = cfg.seed + 10_000 + rep
    records = []
    models = {}
    for estimator in cfg.estimators:
        start = time.perf_counter()
        model, chosen = tune_and_fit(data, estimator, grids, cfg, seed=split_seed)
        metric = _test_metric(cfg, model, rep, test)
        seconds = time.perf_counter() - start
        records.append(ResultRecord(
            replicate=rep, estimator=estimator,
            lam=chosen.get("lam"), tau=chosen.get("tau"), k=chosen.get("k"),
            metric=metric, sparsity=model.sparsity, seconds=seconds,
        ))
        models[estimator] = model
    return records, models


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_records_csv(records: list[ResultRecord], path: Path) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["replicate", "estimator", "lambda", "tau", "k",
                         "metric", "sparsity", "seconds"])
        for r in records:
            writer.writerow([r.replicate, r.estimator, _fmt(r.lam), _fmt(r.tau),
                             _fmt(r.k), _fmt(r.metric), _fmt(r.sparsity),
                             _fmt(round(r.seconds, 3))])


def summarize(records: list[ResultRecord]) -> dict:
    out = {}
    for estimator in sorted({r.estimator for r in records}):
        metrics = np.array([r.metric for r in records if r.estimator == estimator])
        entry = {
            "n": int(metrics.size),
            "metric_mean": float(np.mean(metrics)),
            "metric_sd": float(np.std(metrics, ddof=1)) if metrics.size > 1 else 0.0,
        }
        sps = [r.sparsity for r in records if r.estimator == estimator and r.sparsity is not None]
        if sps:
            entry["sparsity_mean"] = float(np.mean(sps))
            entry["sparsity_sd"] = float(np.std(sps, ddof=1)) if len(sps) > 1 else 0.0
        out[estimator] = entry
    return out


def run_experiment(cfg: ExperimentConfig) -> list[ResultRecord]:
    """Run all replicates, write records.csv and summary.json, return records."""
    full = None
    if cfg.task == "classification-csv":
        full = ingest_csv(cfg.csv_path, cfg.label_column, "classification")

    results: dict[int, tuple] = {}
    workers = worker_count()
    if workers > 1 and cfg.n_replicates > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {rep: pool.submit(_run_replicate, cfg, rep, full)
                       for rep in range(cfg.n_replicates)}
            results = {rep: fut.result() for rep, fut in futures.items()}
    else:
        results = {rep: _run_replicate(cfg, rep, full) for rep in range(cfg.n_replicates)}

    records = [r for rep in sorted(results) for r in results[rep][0]]
    records.sort(key=lambda r: (r.replicate, r.estimator))

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_records_csv(records, out_dir / "records.csv")
    (out_dir / "summary.json").write_text(json.dumps(summarize(records), indent=2) + "\n")

    if cfg.write_traces:
        for rep in sorted(results):
            for estimator, model in results[rep][1].items():
                if model.report is None:
                    continue
                trace_path = out_dir / f"trace_{rep}_{estimator}.csv"
                with trace_path.open("w", newline="") as fh:
                    fh.write("iteration,objective,risk,penalty,sparsity\n")
                    rpt = model.report
                    for i in range(len(rpt)):
                        fh.write(f"{i},{rpt.objective[i]!r},{rpt.risk[i]!r},"
                                 f"{rpt.penalty[i]!r},{rpt.sparsity[i]!r}\n")
    return records


def ingest_csv(path, label_column: str, task: str) -> Dataset:
    """Load a user CSV: min-max scale features to [0,1], map labels.

    Classification labels must take exactly two values and are mapped to
    -1/+1 by lexicographic order.  Constant feature columns become 0.5.
    Missing or non-numeric feature cells abort with the offending rows.
    """
    if task not in ("regression", "classification"):
        raise ValueError("task must be 'regression' or 'classification'")
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise ValueError(f"{path}: empty file")
        rows = list(reader)
    if label_column not in header:
        raise ValueError(f"{path}: no column named '{label_column}'")
    if not rows:
        raise ValueError(f"{path}: no data rows")
    label_idx = header.index(label_column)
    feature_idx = [j for j in range(len(header)) if j != label_idx]

    bad_rows = []
    features = np.empty((len(rows), len(feature_idx)))
    labels_raw = []
    for i, row in enumerate(rows):
        if len(row) != len(header) or any(row[j].strip() == "" for j in range(len(row))):
            bad_rows.append(i + 2)  # 1-based, counting the header line
            continue
        try:
            features[i] = [float(row[j]) for j in feature_idx]
        except ValueError:
            bad_rows.append(i + 2)
            continue
        labels_raw.append(row[label_idx].strip())
    if bad_rows:
        raise ValueError(f"{path}: missing or non-numeric values in rows {bad_rows}")

    lo = features.min(axis=0)
    hi = features.max(axis=0)
    span = hi - lo
    constant = span == 0
    span[constant] = 1.0
    scaled = (features - lo) / span
    scaled[:, constant] = 0.5

    if task == "classification":
        classes = sorted(set(labels_raw))
        if len(classes) != 2:
            raise ValueError(
                f"{path}: classification needs exactly 2 label values, found {classes}"
            )
        mapping = {classes[0]: -1.0, classes[1]: 1.0}
        targets = np.array([mapping[v] for v in labels_raw])
        label_map = {classes[0]: -1, classes[1]: 1}
    else:
        try:
            targets = np.array([float(v) for v in labels_raw])
        except ValueError as err:
            raise ValueError(f"{path}: non-numeric regression label: {err}") from None
        label_map = None

    meta = {"source": str(path), "label_column": label_column, "task": task,
            "label_map": label_map, "n": len(rows), "d": len(feature_idx)}
    return Dataset(scaled, targets, meta)
