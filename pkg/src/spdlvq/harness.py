"""Experiment orchestration: repeated runs, metrics, and cross-validation.

``run_experiment`` executes a method over independent repetitions (either
regenerating a synthetic problem per repetition or reusing datasets loaded
from files), aggregates a :class:`~spdlvq.metrics.MetricsReport`, and writes
per-epoch history files suitable for plotting. ``run_cv`` grid-searches
hyperparameters with stratified k-fold cross-validation.

Per-repetition seeds derive from the experiment seed through
``SeedSequence(seed).generate_state(2 * repetitions)``: entry ``2r`` seeds
the data generation of repetition ``r`` and entry ``2r + 1`` its training.
Repetitions are independent, so they may run in a worker pool; results are
aggregated in repetition order either way.
"""

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .baselines import (
    DEFAULT_TAU,
    euclidean_rslvq_predict_batch,
    euclidean_rslvq_train,
    mdrm_predict_batch,
    mdrm_train,
)
from .data import concat_datasets
from .exceptions import ConfigurationError
from .metrics import MetricsReport
from .plrsq import Model, TrainConfig, predict_batch, train
from .serialization import atomic_write_text, load_dataset
from .synthetic import SynthSpec, gen_dataset

METHODS = ("plrsq-an", "plrsq-const", "mdrm", "rslvq-euclidean")

HISTORY_COLUMNS = ("epoch", "cost", "train_err", "test_err", "sigma_sq", "alpha")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a method, its hyperparameters, data, and repetitions.

    Exactly one data source must be set: ``synth_name`` (fresh train,
    validation and test splits are generated per repetition) or
    ``train_path`` plus ``test_path``. With synthetic data the
    nearest-mean baseline is fitted on train plus validation while the LVQ
    methods train on the training split only, mirroring the usual
    protocol of tuning on the validation split.
    """

    method: str
    train: TrainConfig
    repetitions: int = 1
    seed: int = 0
    synth_name: str = None
    instances_per_class: int = 250
    train_path: str = None
    test_path: str = None
    out_dir: str = None
    tau: float = DEFAULT_TAU
    workers: int = 1

    def validate(self):
        if self.method not in METHODS:
            raise ConfigurationError(
                f"unknown method {self.method!r}, expected one of {METHODS}"
            )
        if self.repetitions < 1:
            raise ConfigurationError("repetitions must be at least 1")
        if int(self.seed) < 0:
            raise ConfigurationError("seed must be non-negative")
        has_synth = self.synth_name is not None
        has_files = self.train_path is not None
        if has_synth == has_files:
            raise ConfigurationError(
                "set exactly one data source: synth_name or train_path"
            )
        if has_files and self.test_path is None:
            raise ConfigurationError("file-based experiments need test_path")
        if self.method != "mdrm":
            resolve_train_config(self).validate()
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")
        return self


def resolve_train_config(config):
    """Training config with the annealing flag implied by the method name."""
    if config.method == "plrsq-an":
        return replace(config.train, anneal=True)
    if config.method in ("plrsq-const", "rslvq-euclidean"):
        return replace(config.train, anneal=config.train.anneal)
    return config.train


def _predict_any(model, Xs):
    if isinstance(model, Model):
        return predict_batch(model, Xs)[0]
    if hasattr(model, "class_means"):
        return mdrm_predict_batch(model, Xs)
    return euclidean_rslvq_predict_batch(model, Xs)[0]


def _run_repetition(config, rep, data_seed, train_seed, loaded):
    """Train and evaluate one repetition; returns (labels, predictions, history)."""
    if config.synth_name is not None:
        spec = SynthSpec.by_name(config.synth_name, seed=data_seed,
                                 instances_per_class=config.instances_per_class)
        train_ds, validation_ds, test_ds = gen_dataset(spec)
    else:
        train_ds, test_ds = loaded
        validation_ds = None

    history = None
    # track per-epoch test error only when history files will be written
    eval_ds = test_ds if config.out_dir is not None else None
    if config.method == "mdrm":
        fit_ds = train_ds
        if validation_ds is not None:
            fit_ds = concat_datasets(train_ds, validation_ds)
        model = mdrm_train(fit_ds)
    else:
        train_cfg = replace(resolve_train_config(config), rng_seed=train_seed)
        if config.method == "rslvq-euclidean":
            model, history = euclidean_rslvq_train(train_ds, train_cfg,
                                                   tau=config.tau, eval_data=eval_ds)
        else:
            model, history = train(train_ds, train_cfg, eval_data=eval_ds)
    predictions = _predict_any(model, test_ds.matrices)
    return test_ds.labels, predictions, history


def _derived_seeds(seed, repetitions):
    state = np.random.SeedSequence(int(seed)).generate_state(2 * repetitions)
    return [(int(state[2 * r]), int(state[2 * r + 1])) for r in range(repetitions)]


def history_table(history):
    """Render a history as the standard delimiter-separated text table."""
    lines = [" ".join(HISTORY_COLUMNS)]
    for row in history.rows():
        epoch, cost_v, train_e, test_e, sigma, alpha = row
        lines.append(
            f"{epoch} {cost_v:.10g} {train_e:.10g} {test_e:.10g} "
            f"{sigma:.10g} {alpha:.10g}"
        )
    return "\n".join(lines) + "\n"


def run_experiment(config):
    """Run all repetitions of an experiment and aggregate the metrics.

    When ``config.out_dir`` is set, writes one history file per repetition
    of an iterative method (``history_run<r>.tsv``) and a ``metrics.json``
    with the aggregated report. Fully deterministic for a fixed seed.

    Returns
    -------
    MetricsReport
    """
    config.validate()
    loaded = None
    if config.train_path is not None:
        train_ds = load_dataset(config.train_path)
        test_ds = load_dataset(config.test_path)
        if train_ds.num_classes != test_ds.num_classes or train_ds.dim != test_ds.dim:
            raise ConfigurationError("train and test datasets are incompatible")
        loaded = (train_ds, test_ds)
        num_classes = train_ds.num_classes
    else:
        num_classes = SynthSpec.by_name(config.synth_name, seed=0).num_classes

    seeds = _derived_seeds(config.seed, config.repetitions)
    jobs = [(config, r, ds, ts, loaded) for r, (ds, ts) in enumerate(seeds)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_run_repetition_star, jobs))
    else:
        results = [_run_repetition_star(job) for job in jobs]

    report = MetricsReport(method=config.method, num_classes=num_classes)
    for rep, (labels, predictions, history) in enumerate(results):
        report.add_run(labels, predictions)
        if history is not None and config.out_dir is not None:
            path = os.path.join(config.out_dir, f"history_run{rep:02d}.tsv")
            atomic_write_text(path, history_table(history))
    if config.out_dir is not None:
        atomic_write_text(
            os.path.join(config.out_dir, "metrics.json"),
            json.dumps(report.to_dict(), indent=2) + "\n",
        )
    return report


def _run_repetition_star(job):
    return _run_repetition(*job)


def stratified_folds(labels, num_classes, folds, seed):
    """Deterministic stratified fold assignment, one fold id per sample.

    Within every class the samples are shuffled by a class-keyed stream and
    dealt round-robin, so per-class fold counts differ by at most one.
    """
    labels = np.asarray(labels)
    if folds < 2:
        raise ConfigurationError("cross-validation needs at least 2 folds")
    assignment = np.empty(len(labels), dtype=np.int64)
    for k in range(1, num_classes + 1):
        idx = np.flatnonzero(labels == k)
        if idx.size < folds:
            raise ConfigurationError(
                f"class {k} has {idx.size} samples, fewer than {folds} folds"
            )
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), k]))
        perm = rng.permutation(idx.size)
        assignment[idx[perm]] = np.arange(idx.size) % folds
    return assignment


def run_cv(data, sigma_sq_grid, xi_grid, epochs_grid, folds, seed,
           method="plrsq-an", base_config=None, tau=DEFAULT_TAU):
    """Stratified k-fold grid search over scale, prototype count and epochs.

    Every grid point is scored by its mean validation accuracy across the
    folds; ties prefer the smaller ``sigma_sq``, then fewer prototypes, then
    fewer epochs. Returns the winning parameters and the full result table.

    Returns
    -------
    (dict, list of dict)
        Best point (``sigma_sq``, ``xi``, ``epochs``, ``mean_accuracy``,
        ``std_accuracy``) and one row per grid point in evaluation order.
    """
    if method == "mdrm":
        raise ConfigurationError("mdrm has no hyperparameters to cross-validate")
    if method not in METHODS:
        raise ConfigurationError(f"unknown method {method!r}")
    if not sigma_sq_grid or not xi_grid or not epochs_grid:
        raise ConfigurationError("all grids must be non-empty")
    data.validate()
    if base_config is None:
        base_config = TrainConfig(sigma_sq_opt=1.0)
    assignment = stratified_folds(data.labels, data.num_classes, folds, seed)

    table = []
    best = None
    for sigma_sq in sorted(sigma_sq_grid):
        for xi in sorted(xi_grid):
            for epochs in sorted(epochs_grid):
                accs = []
                for fold in range(folds):
                    train_ds = data.subset(np.flatnonzero(assignment != fold))
                    valid_ds = data.subset(np.flatnonzero(assignment == fold))
                    fold_seed = int(
                        np.random.SeedSequence(
                            [int(seed), len(table), fold]
                        ).generate_state(1)[0]
                    )
                    cfg = replace(
                        base_config, sigma_sq_opt=sigma_sq, prototypes_per_class=xi,
                        epochs=epochs, rng_seed=fold_seed,
                        anneal=(method == "plrsq-an") if method.startswith("plrsq")
                        else base_config.anneal,
                    )
                    if method == "rslvq-euclidean":
                        model, _ = euclidean_rslvq_train(train_ds, cfg, tau=tau)
                    else:
                        model, _ = train(train_ds, cfg)
                    predictions = _predict_any(model, valid_ds.matrices)
                    accs.append(float(np.mean(predictions == valid_ds.labels)))
                row = {
                    "sigma_sq": float(sigma_sq),
                    "xi": int(xi),
                    "epochs": int(epochs),
                    "mean_accuracy": float(np.mean(accs)),
                    "std_accuracy": float(np.std(accs)),
                }
                table.append(row)
                if best is None or row["mean_accuracy"] > best["mean_accuracy"]:
                    best = row
    return best, table
