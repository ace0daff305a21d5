"""Unit tests for dataset containers and covariance descriptors."""

import numpy as np
import pytest

from spdlvq.data import LabeledDataset, concat_datasets, covariance_from_trial
from spdlvq.exceptions import DomainError, ValidationError

from conftest import random_spd


def make_dataset(rng, m=6, n=3, num_classes=2):
    mats = np.stack([random_spd(rng, n) for _ in range(m)])
    labels = 1 + (np.arange(m) % num_classes)
    return LabeledDataset(mats, labels, num_classes)


class TestLabeledDataset:
    def test_validate_accepts_good_data(self, rng):
        make_dataset(rng).validate()

    def test_rejects_bad_labels(self, rng):
        data = make_dataset(rng)
        bad = LabeledDataset(data.matrices, data.labels + 5, 2)
        with pytest.raises(ValidationError):
            bad.validate()

    def test_rejects_non_spd(self, rng):
        data = make_dataset(rng)
        mats = data.matrices.copy()
        mats[0] = np.diag([1.0, -1.0, 1.0])
        with pytest.raises(DomainError):
            LabeledDataset(mats, data.labels, 2).validate()

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            LabeledDataset(np.empty((0, 2, 2)), np.empty(0), 2).validate()

    def test_subset_and_indices(self, rng):
        data = make_dataset(rng)
        ones = data.class_indices(1)
        sub = data.subset(ones)
        assert np.all(sub.labels == 1)
        assert np.array_equal(sub.matrices, data.matrices[ones])

    def test_concat(self, rng):
        a = make_dataset(rng)
        b = make_dataset(rng)
        both = concat_datasets(a, b)
        assert len(both) == len(a) + len(b)
        assert np.array_equal(both.matrices[: len(a)], a.matrices)


class TestCovarianceFromTrial:
    def test_orthogonal_rows_identity(self):
        length = 5
        E = np.array([
            [1.0, -1.0, 1.0, -1.0, 0.0],
            [1.0, 1.0, -1.0, -1.0, 0.0],
        ])
        # rows are zero mean, orthogonal, squared norm = length - 1
        assert np.allclose(E.sum(axis=1), 0.0)
        X = covariance_from_trial(E)
        assert np.allclose(X, np.eye(2))

    def test_single_channel_variance(self):
        X = covariance_from_trial(np.array([[1.0, -1.0, 1.0, -1.0]]))
        assert X.shape == (1, 1)
        assert X[0, 0] == pytest.approx(4.0 / 3.0)

    def test_symmetric_output(self, rng):
        E = rng.normal(size=(4, 50))
        X = covariance_from_trial(E)
        assert np.array_equal(X, X.T)
        assert np.linalg.eigvalsh(X).min() > 0

    def test_rank_deficient_rejected(self, rng):
        row = rng.normal(size=20)
        E = np.stack([row, 2.0 * row, rng.normal(size=20)])
        with pytest.raises(DomainError) as exc:
            covariance_from_trial(E)
        assert "regulariz" in str(exc.value)

    def test_too_few_samples(self):
        with pytest.raises(ValidationError):
            covariance_from_trial(np.ones((3, 1)))
