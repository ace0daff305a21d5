"""Unit tests for dataset and model file formats."""

import numpy as np
import pytest

from spdlvq.baselines import EuclideanRslvqModel, MdrmModel, mdrm_predict_batch
from spdlvq.data import LabeledDataset
from spdlvq.exceptions import FileFormatError
from spdlvq.plrsq import Model, TrainConfig, predict_batch
from spdlvq.serialization import (
    config_hash,
    load_dataset,
    load_model,
    save_dataset,
    save_model,
)

from conftest import random_spd


def small_dataset(rng, m=5, n=3, num_classes=2):
    mats = np.stack([random_spd(rng, n) for _ in range(m)])
    labels = 1 + (np.arange(m) % num_classes)
    return LabeledDataset(mats, labels, num_classes)


class TestDatasetFiles:
    def test_round_trip_bit_identical(self, rng, tmp_path):
        data = small_dataset(rng)
        path = tmp_path / "data.spdds"
        save_dataset(path, data)
        loaded = load_dataset(path)
        assert np.array_equal(loaded.matrices, data.matrices)
        assert np.array_equal(loaded.labels, data.labels)
        assert loaded.num_classes == data.num_classes

    def test_save_is_deterministic(self, rng, tmp_path):
        data = small_dataset(rng)
        p1, p2 = tmp_path / "a", tmp_path / "b"
        save_dataset(p1, data)
        save_dataset(p2, data)
        assert p1.read_bytes() == p2.read_bytes()

    def test_golden_file(self, tmp_path):
        text = (
            "SPDDS v1 n=2 C=2 m=2\n"
            "1\n"
            "2 0.5\n"
            "0.5 1\n"
            "2\n"
            "3 0\n"
            "0 0.25\n"
        )
        path = tmp_path / "golden.spdds"
        path.write_text(text)
        data = load_dataset(path)
        assert np.array_equal(data.matrices[0], [[2.0, 0.5], [0.5, 1.0]])
        assert np.array_equal(data.matrices[1], [[3.0, 0.0], [0.0, 0.25]])
        assert data.labels.tolist() == [1, 2]

    def test_truncated_file_reports_offset(self, rng, tmp_path):
        data = small_dataset(rng)
        path = tmp_path / "data.spdds"
        save_dataset(path, data)
        content = path.read_bytes()
        truncated = tmp_path / "cut.spdds"
        truncated.write_bytes(content[: len(content) // 2])
        with pytest.raises(FileFormatError) as exc:
            load_dataset(truncated)
        assert exc.value.byte_offset is not None
        assert "byte offset" in str(exc.value)

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "bad.spdds"
        path.write_text("SPDXX v9 nope\n")
        with pytest.raises(FileFormatError):
            load_dataset(path)

    def test_dimension_mismatch_detected(self, tmp_path):
        path = tmp_path / "bad.spdds"
        path.write_text("SPDDS v1 n=2 C=1 m=1\n1\n1 0 0\n0 1 0\n")
        with pytest.raises(FileFormatError):
            load_dataset(path)

    def test_non_spd_rejected_on_load(self, tmp_path):
        path = tmp_path / "bad.spdds"
        path.write_text("SPDDS v1 n=2 C=1 m=1\n1\n1 0\n0 -1\n")
        with pytest.raises(Exception) as exc:
            load_dataset(path)
        assert "SPD" in str(exc.value) or "positive" in str(exc.value)

    def test_trailing_garbage_rejected(self, rng, tmp_path):
        data = small_dataset(rng, m=1)
        path = tmp_path / "data.spdds"
        save_dataset(path, data)
        with open(path, "a") as handle:
            handle.write("extra line\n")
        with pytest.raises(FileFormatError):
            load_dataset(path)


class TestModelFiles:
    def plrsq_model(self, rng):
        protos = np.stack([random_spd(rng, 3) for _ in range(4)])
        labels = np.array([1, 1, 2, 2])
        return Model(protos, labels, 0.7321, np.full(4, 0.25), 2)

    def test_plrsq_round_trip(self, rng, tmp_path):
        model = self.plrsq_model(rng)
        path = tmp_path / "model.spdm"
        config = TrainConfig(sigma_sq_opt=0.7321, rng_seed=5)
        save_model(path, model, seed=5, config=config)
        loaded = load_model(path)
        assert isinstance(loaded, Model)
        assert np.array_equal(loaded.prototypes, model.prototypes)
        assert np.array_equal(loaded.labels, model.labels)
        assert loaded.sigma_sq == model.sigma_sq
        assert np.array_equal(loaded.priors, model.priors)

    def test_predictions_survive_round_trip(self, rng, tmp_path):
        model = self.plrsq_model(rng)
        Xs = np.stack([random_spd(rng, 3) for _ in range(6)])
        before_labels, before_probs = predict_batch(model, Xs)
        path = tmp_path / "model.spdm"
        save_model(path, model)
        loaded = load_model(path)
        after_labels, after_probs = predict_batch(loaded, Xs)
        assert np.array_equal(before_labels, after_labels)
        assert np.array_equal(before_probs, after_probs)

    def test_mdrm_round_trip(self, rng, tmp_path):
        means = np.stack([random_spd(rng, 4) for _ in range(3)])
        model = MdrmModel(means, 3)
        path = tmp_path / "mdrm.spdm"
        save_model(path, model)
        loaded = load_model(path)
        assert isinstance(loaded, MdrmModel)
        assert np.array_equal(loaded.class_means, means)
        Xs = np.stack([random_spd(rng, 4) for _ in range(5)])
        assert np.array_equal(
            mdrm_predict_batch(model, Xs), mdrm_predict_batch(loaded, Xs)
        )

    def test_rslvq_round_trip(self, rng, tmp_path):
        protos = np.stack([random_spd(rng, 3) for _ in range(2)])
        model = EuclideanRslvqModel(protos, np.array([1, 2]), 1.5, 1e-4, 2)
        path = tmp_path / "rslvq.spdm"
        save_model(path, model)
        loaded = load_model(path)
        assert isinstance(loaded, EuclideanRslvqModel)
        assert np.array_equal(loaded.prototypes, protos)
        assert loaded.tau == 1e-4
        assert loaded.sigma_sq == 1.5

    def test_corrupted_checksum_rejected(self, rng, tmp_path):
        model = self.plrsq_model(rng)
        path = tmp_path / "model.spdm"
        save_model(path, model)
        text = path.read_text()
        # flip one digit inside a prototype entry
        corrupted = text.replace("prototype 1", "prototype 2", 1)
        path.write_text(corrupted)
        with pytest.raises(FileFormatError) as exc:
            load_model(path)
        assert "checksum" in str(exc.value)

    def test_missing_checksum_rejected(self, rng, tmp_path):
        path = tmp_path / "model.spdm"
        path.write_text("SPDMODEL v1 method=mdrm n=2 C=1 M=1\nprototype 1\n1 0\n0 1\n")
        with pytest.raises(FileFormatError):
            load_model(path)

    def test_config_hash_stable(self):
        a = TrainConfig(sigma_sq_opt=1.0, rng_seed=1)
        b = TrainConfig(sigma_sq_opt=1.0, rng_seed=1)
        c = TrainConfig(sigma_sq_opt=2.0, rng_seed=1)
        assert config_hash(a) == config_hash(b)
        assert config_hash(a) != config_hash(c)
