"""Unit tests for the nearest-Riemannian-mean and Euclidean LVQ baselines."""

import numpy as np
import pytest

from spdlvq.baselines import (
    euclidean_rslvq_predict,
    euclidean_rslvq_predict_batch,
    euclidean_rslvq_train,
    mdrm_predict,
    mdrm_predict_batch,
    mdrm_train,
    project_to_spd,
)
from spdlvq.data import LabeledDataset
from spdlvq.exceptions import ValidationError
from spdlvq.geometry import exp_map, geo_distance, geodesic, log_map, symmetrize
from spdlvq.plrsq import TrainConfig

from conftest import random_spd, random_symmetric


def clustered_dataset(rng, n=3, num_classes=3, per_class=6, spread=0.2):
    mats, labels = [], []
    for k in range(1, num_classes + 1):
        anchor = random_spd(rng, n)
        for _ in range(per_class):
            mats.append(exp_map(anchor, random_symmetric(rng, n, scale=spread)))
            labels.append(k)
    return LabeledDataset(np.stack(mats), np.array(labels), num_classes)


class TestMdrm:
    def test_single_sample_means(self, rng):
        mats = np.stack([random_spd(rng, 3) for _ in range(3)])
        data = LabeledDataset(mats, np.array([1, 2, 3]), 3)
        model = mdrm_train(data)
        assert np.array_equal(model.class_means, mats)

    def test_two_sample_midpoint(self, rng):
        A, B = random_spd(rng, 4), random_spd(rng, 4)
        data = LabeledDataset(np.stack([A, B]), np.array([1, 1]), 1)
        model = mdrm_train(data)
        midpoint = geodesic(A, log_map(A, B), 0.5)
        assert np.abs(model.class_means[0] - midpoint).max() < 1e-6

    def test_predict_exact_mean(self, rng):
        data = clustered_dataset(rng)
        model = mdrm_train(data)
        for k in range(1, 4):
            assert mdrm_predict(model, model.class_means[k - 1]) == k

    def test_tie_breaks_low(self):
        means = np.stack([np.diag([np.e, 1.0]), np.diag([1.0, np.e])])
        from spdlvq.baselines import MdrmModel

        model = MdrmModel(means, 2)
        assert mdrm_predict(model, np.eye(2)) == 1

    def test_matches_bruteforce_argmin(self, rng):
        data = clustered_dataset(rng)
        model = mdrm_train(data)
        Xs = np.stack([random_spd(rng, 3) for _ in range(10)])
        preds = mdrm_predict_batch(model, Xs)
        for i, X in enumerate(Xs):
            dists = [geo_distance(X, mean) for mean in model.class_means]
            assert preds[i] == int(np.argmin(dists)) + 1

    def test_congruence_invariance(self, rng):
        data = clustered_dataset(rng)
        model = mdrm_train(data)
        W = rng.normal(size=(3, 3))
        while abs(np.linalg.det(W)) < 1e-3:
            W = rng.normal(size=(3, 3))
        Xs = np.stack([random_spd(rng, 3) for _ in range(8)])
        before = mdrm_predict_batch(model, Xs)
        from spdlvq.baselines import MdrmModel

        moved = MdrmModel(
            symmetrize(W.T @ model.class_means @ W), model.num_classes
        )
        after = mdrm_predict_batch(moved, symmetrize(W.T @ Xs @ W))
        assert np.array_equal(before, after)

    def test_empty_class_error(self, rng):
        data = clustered_dataset(rng)
        bad = LabeledDataset(data.matrices, data.labels, num_classes=4)
        with pytest.raises(ValidationError):
            mdrm_train(bad)


class TestProjectToSpd:
    def test_spd_input_unchanged(self, rng):
        X = random_spd(rng, 4)
        assert np.abs(project_to_spd(X, 1e-4) - X).max() < 1e-10

    def test_clamps_negative_eigenvalue(self):
        out = project_to_spd(np.diag([1.0, -0.5]), 1e-4)
        assert np.allclose(np.sort(np.linalg.eigvalsh(out)), [1e-4, 1.0])

    def test_floor_holds_for_random_symmetric(self, rng):
        for _ in range(25):
            W = random_symmetric(rng, 5, scale=2.0)
            out = project_to_spd(W, 1e-4)
            assert np.linalg.eigvalsh(out).min() >= 1e-4 - 1e-12


class TestEuclideanRslvq:
    def test_sample_at_prototype_does_not_move_it(self, rng):
        from spdlvq.baselines import _apply_euclidean_update

        protos = np.stack([random_spd(rng, 3) for _ in range(3)])
        labels = np.array([1, 2, 3])
        priors = np.full(3, 1.0 / 3.0)
        X = protos[1].copy()
        before = protos.copy()
        _apply_euclidean_update(protos, labels, priors, X, 2, 0.1, 1.0, 1e-4)
        # the matching prototype stays put (up to projection round-off) ...
        assert np.abs(protos[1] - before[1]).max() < 1e-12
        # ... while wrong-class prototypes are pushed away
        for l in (0, 2):
            assert np.linalg.norm(protos[l] - X) >= np.linalg.norm(before[l] - X)

    def test_single_class_unchanged(self, rng):
        data = clustered_dataset(rng, num_classes=1, per_class=8)
        config = TrainConfig(sigma_sq_opt=1.0, epochs=4, anneal=False,
                             init_perturb_scale=0.0, rng_seed=3)
        model, _ = euclidean_rslvq_train(data, config)
        mean = project_to_spd(symmetrize(data.matrices.mean(axis=0)), model.tau)
        assert np.array_equal(model.prototypes[0], mean)

    def test_prototype_eigenvalues_respect_floor(self, rng):
        data = clustered_dataset(rng, per_class=6)
        config = TrainConfig(sigma_sq_opt=0.5, epochs=5, rng_seed=7,
                             prototypes_per_class=2)
        model, _ = euclidean_rslvq_train(data, config, tau=1e-4)
        assert np.linalg.eigvalsh(model.prototypes).min() >= 1e-4 - 1e-12

    def test_deterministic(self, rng):
        data = clustered_dataset(rng)
        config = TrainConfig(sigma_sq_opt=1.0, epochs=3, rng_seed=5)
        a, hist_a = euclidean_rslvq_train(data, config)
        b, hist_b = euclidean_rslvq_train(data, config)
        assert np.array_equal(a.prototypes, b.prototypes)
        assert hist_a.rows() == hist_b.rows()

    def test_learns_separable_classes(self, rng):
        data = clustered_dataset(rng, per_class=10, spread=0.1)
        config = TrainConfig(sigma_sq_opt=1.0, epochs=10, rng_seed=2)
        model, _ = euclidean_rslvq_train(data, config)
        preds, probs = euclidean_rslvq_predict_batch(model, data.matrices)
        assert np.mean(preds == data.labels) >= 0.9
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-10)

    def test_single_prediction_matches_batch(self, rng):
        data = clustered_dataset(rng)
        config = TrainConfig(sigma_sq_opt=1.0, epochs=2, rng_seed=5)
        model, _ = euclidean_rslvq_train(data, config)
        X = random_spd(rng, 3)
        batch, _ = euclidean_rslvq_predict_batch(model, X[None])
        assert euclidean_rslvq_predict(model, X) == batch[0]
