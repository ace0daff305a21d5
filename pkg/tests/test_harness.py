"""Unit tests for the experiment harness and cross-validation."""

import numpy as np
import pytest

from spdlvq.data import LabeledDataset
from spdlvq.exceptions import ConfigurationError
from spdlvq.geometry import exp_map
from spdlvq.harness import (
    ExperimentConfig,
    history_table,
    run_cv,
    run_experiment,
    stratified_folds,
)
from spdlvq.plrsq import TrainConfig, TrainHistory
from spdlvq.serialization import save_dataset

from conftest import random_spd, random_symmetric


def clustered_dataset(rng, n=3, num_classes=2, per_class=10, spread=0.1):
    mats, labels = [], []
    for k in range(1, num_classes + 1):
        anchor = random_spd(rng, n)
        for _ in range(per_class):
            mats.append(exp_map(anchor, random_symmetric(rng, n, scale=spread)))
            labels.append(k)
    return LabeledDataset(np.stack(mats), np.array(labels), num_classes)


def tiny_config(method="plrsq-an", **kwargs):
    train = TrainConfig(sigma_sq_opt=1.0, epochs=2, rng_seed=0)
    defaults = dict(method=method, train=train, repetitions=1, seed=3,
                    synth_name="SynI", instances_per_class=4)
    defaults.update(kwargs)
    return ExperimentConfig(**defaults)


class TestStratifiedFolds:
    def test_counts_differ_by_at_most_one(self, rng):
        labels = np.repeat([1, 2, 3], [11, 9, 10])
        assignment = stratified_folds(labels, 3, 4, seed=5)
        for k in (1, 2, 3):
            counts = np.bincount(assignment[labels == k], minlength=4)
            assert counts.max() - counts.min() <= 1

    def test_deterministic(self):
        labels = np.repeat([1, 2], [10, 10])
        a = stratified_folds(labels, 2, 5, seed=1)
        b = stratified_folds(labels, 2, 5, seed=1)
        assert np.array_equal(a, b)

    def test_small_class_rejected(self):
        labels = np.array([1, 1, 1, 2, 2])
        with pytest.raises(ConfigurationError):
            stratified_folds(labels, 2, 3, seed=0)


class TestRunCv:
    def test_single_point_selected(self, rng):
        data = clustered_dataset(rng)
        best, table = run_cv(data, [1.0], [1], [2], folds=2, seed=1)
        assert len(table) == 1
        assert best["sigma_sq"] == 1.0
        assert best["xi"] == 1
        assert best["epochs"] == 2

    def test_separable_data_tie_prefers_smallest(self, rng):
        data = clustered_dataset(rng, spread=0.02, per_class=8)
        best, table = run_cv(data, [0.5, 2.0], [1, 2], [1, 2], folds=2, seed=1)
        assert all(row["mean_accuracy"] == 1.0 for row in table)
        assert (best["sigma_sq"], best["xi"], best["epochs"]) == (0.5, 1, 1)

    def test_mdrm_rejected(self, rng):
        data = clustered_dataset(rng)
        with pytest.raises(ConfigurationError):
            run_cv(data, [1.0], [1], [1], folds=2, seed=1, method="mdrm")

    def test_table_covers_grid(self, rng):
        data = clustered_dataset(rng)
        _, table = run_cv(data, [0.5, 1.0], [1], [1, 2], folds=2, seed=1)
        assert len(table) == 4


class TestRunExperiment:
    def test_synthetic_repetitions(self, tmp_path):
        config = tiny_config(repetitions=2, out_dir=str(tmp_path))
        report = run_experiment(config)
        assert report.runs == 2
        assert 0.0 <= report.accuracy <= 1.0
        assert (tmp_path / "metrics.json").exists()
        history = (tmp_path / "history_run00.tsv").read_text().strip().split("\n")
        assert history[0].split() == ["epoch", "cost", "train_err", "test_err",
                                      "sigma_sq", "alpha"]
        assert len(history) - 1 == config.train.epochs

    def test_deterministic_report(self):
        config = tiny_config(repetitions=2)
        a = run_experiment(config)
        b = run_experiment(config)
        assert a.to_dict() == b.to_dict()

    def test_mdrm_writes_no_history(self, tmp_path):
        config = tiny_config(method="mdrm", out_dir=str(tmp_path))
        report = run_experiment(config)
        assert report.runs == 1
        assert not list(tmp_path.glob("history_*"))
        assert (tmp_path / "metrics.json").exists()

    def test_file_based_experiment(self, rng, tmp_path):
        train_ds = clustered_dataset(rng, per_class=8)
        test_ds = clustered_dataset(rng, per_class=8)
        train_path = tmp_path / "train.spdds"
        test_path = tmp_path / "test.spdds"
        save_dataset(train_path, train_ds)
        save_dataset(test_path, test_ds)
        config = tiny_config(synth_name=None, train_path=str(train_path),
                             test_path=str(test_path))
        report = run_experiment(config)
        assert report.runs == 1
        assert report.confusion.sum() == len(test_ds)

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            tiny_config(method="unknown").validate()
        with pytest.raises(ConfigurationError):
            tiny_config(synth_name=None).validate()
        with pytest.raises(ConfigurationError):
            tiny_config(repetitions=0).validate()

    def test_rslvq_method_runs(self, tmp_path):
        config = tiny_config(method="rslvq-euclidean", out_dir=str(tmp_path))
        report = run_experiment(config)
        assert report.runs == 1
        assert (tmp_path / "history_run00.tsv").exists()

    def test_worker_pool_matches_sequential(self):
        sequential = run_experiment(tiny_config(repetitions=3, workers=1))
        parallel = run_experiment(tiny_config(repetitions=3, workers=2))
        assert sequential.to_dict() == parallel.to_dict()


class TestHistoryTable:
    def test_renders_rows(self):
        history = TrainHistory()
        history.append(1, 10.0, 0.5, float("nan"), 1.0, 0.1)
        text = history_table(history)
        lines = text.strip().split("\n")
        assert len(lines) == 2
        assert lines[1].startswith("1 10 0.5 nan")
