"""Comparison classifiers: nearest Riemannian class-mean and Euclidean soft LVQ.

MDRM fits one Karcher mean per class and predicts by the shortest geodesic
distance. The Euclidean variant of soft LVQ runs the same mixture-posterior
prototype updates as :mod:`spdlvq.plrsq` but measures distances with the
flat Frobenius norm on matrix entries; since plain additive updates can
leave the SPD cone, every updated prototype is projected back by flooring
its eigenvalues at ``tau`` (projected gradient descent).
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .exceptions import ConfigurationError, ValidationError
from .geometry import check_symmetric, geo_distances, karcher_mean, symmetrize
from .plrsq import (
    TrainHistory,
    _class_log_scores,
    _posteriors_from_sq_dists,
    anneal_sigma,
    learning_rate,
)

_INIT_STREAM = 0
_SHUFFLE_STREAM = 1

#: Default eigenvalue floor for the SPD projection.
DEFAULT_TAU = 1e-4


@dataclass(frozen=True)
class MdrmModel:
    """Per-class Riemannian means for nearest-mean classification."""

    class_means: np.ndarray
    num_classes: int

    def __post_init__(self):
        object.__setattr__(self, "class_means", np.asarray(self.class_means, dtype=float))

    @property
    def dim(self):
        return self.class_means.shape[-1]


def mdrm_train(data, tol=1e-9, max_iter=200):
    """Fit the minimum-distance-to-Riemannian-mean classifier.

    Parameters
    ----------
    data : LabeledDataset
        Training samples; every class must be non-empty.

    Returns
    -------
    MdrmModel
    """
    data.validate()
    means = []
    for k in range(1, data.num_classes + 1):
        idx = data.class_indices(k)
        if idx.size == 0:
            raise ValidationError(f"class {k} has no samples")
        means.append(karcher_mean(data.matrices[idx], tol=tol, max_iter=max_iter))
    return MdrmModel(np.stack(means), data.num_classes)


def mdrm_predict(model, X):
    """Class of the nearest class mean, ties resolved to the lowest class id."""
    X = np.asarray(X, dtype=float)
    dists = geo_distances(model.class_means, X, squared=True)
    return int(np.argmin(dists)) + 1


def mdrm_predict_batch(model, Xs):
    """Predicted classes for a stack of SPD matrices, shape (m,)."""
    Xs = np.asarray(Xs, dtype=float)
    dists = np.stack(
        [geo_distances(Xs, mean, squared=True) for mean in model.class_means],
        axis=1,
    )
    return np.argmin(dists, axis=1) + 1


def project_to_spd(W, tau=DEFAULT_TAU):
    """Project a symmetric matrix onto the SPD cone by flooring eigenvalues.

    Every eigenvalue below ``tau`` is replaced by ``tau`` and the matrix is
    reconstructed; an input whose spectrum already clears the floor is
    returned unchanged up to reconstruction round-off.
    """
    W = check_symmetric(W, "input")
    if not tau > 0:
        raise ConfigurationError("tau must be positive")
    lam, U = np.linalg.eigh(W)
    return symmetrize((U * np.maximum(lam, tau)) @ U.T)


@dataclass(frozen=True)
class EuclideanRslvqModel:
    """Soft LVQ prototypes trained with Frobenius distances.

    Prototypes stay SPD with eigenvalues at least ``tau`` thanks to the
    projection applied after every update. Mixture priors are uniform.
    """

    prototypes: np.ndarray
    labels: np.ndarray
    sigma_sq: float
    tau: float
    num_classes: int

    def __post_init__(self):
        object.__setattr__(self, "prototypes", np.asarray(self.prototypes, dtype=float))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))

    @property
    def dim(self):
        return self.prototypes.shape[-1]

    @property
    def num_prototypes(self):
        return self.prototypes.shape[0]


def _sq_frobenius_to_prototypes(protos, X):
    diff = X - protos
    return np.einsum("ijk,ijk->i", diff, diff)


def _sq_frobenius_matrix(protos, Xs):
    flat_p = protos.reshape(len(protos), -1)
    flat_x = Xs.reshape(len(Xs), -1)
    d2 = (
        np.sum(flat_x**2, axis=1)[:, None]
        - 2.0 * flat_x @ flat_p.T
        + np.sum(flat_p**2, axis=1)[None, :]
    )
    return np.maximum(d2, 0.0)


def _apply_euclidean_update(protos, labels, priors, X, y, alpha, sigma_sq, tau):
    """One stochastic soft-LVQ update of all prototypes in place.

    Additive moves toward (correct class) or away from (other classes) the
    observation, weighted by the mixture posteriors, followed by the SPD
    projection of every moved prototype.
    """
    sq_dists = _sq_frobenius_to_prototypes(protos, X)
    p_class, p_all = _posteriors_from_sq_dists(sq_dists, labels, priors, y, sigma_sq)
    mask = labels == y
    assert np.all(p_class[mask] >= p_all[mask])
    coeff = np.where(mask, p_class - p_all, -p_all) * (alpha / sigma_sq)
    moving = np.flatnonzero(coeff)
    if moving.size == 0:
        return p_class, p_all
    updated = protos[moving] + coeff[moving, None, None] * (X - protos[moving])
    lam, U = np.linalg.eigh(symmetrize(updated))
    protos[moving] = symmetrize(
        (U * np.maximum(lam, tau)[:, None, :]) @ np.swapaxes(U, -1, -2)
    )
    return p_class, p_all


def _init_euclidean(data, prototypes_per_class, perturb, tau, seed):
    """Arithmetic class means plus symmetric perturbation, projected to SPD."""
    rng = np.random.default_rng(seed)
    n = data.dim
    protos = []
    labels = []
    for k in range(1, data.num_classes + 1):
        idx = data.class_indices(k)
        if idx.size == 0:
            raise ValidationError(f"class {k} has no samples")
        mean = symmetrize(data.matrices[idx].mean(axis=0))
        for _ in range(prototypes_per_class):
            W = mean
            if perturb > 0:
                W = mean + symmetrize(rng.normal(0.0, perturb, size=(n, n)))
            protos.append(project_to_spd(W, tau))
            labels.append(k)
    return np.stack(protos), np.asarray(labels, dtype=np.int64)


def euclidean_rslvq_train(data, config, tau=DEFAULT_TAU, eval_data=None):
    """Train Euclidean soft LVQ with SPD projection.

    Follows the same epoch structure, learning-rate decay, scale annealing
    and seeded permutations as :func:`spdlvq.plrsq.train`; only the distance
    (squared Frobenius), the additive update and the projection differ.

    Returns
    -------
    (EuclideanRslvqModel, TrainHistory)
    """
    config.validate()
    data.validate()
    if not tau > 0:
        raise ConfigurationError("tau must be positive")
    n = data.dim
    m = len(data)
    protos, labels = _init_euclidean(
        data, config.prototypes_per_class, config.init_perturb_scale, tau,
        seed=np.random.SeedSequence([int(config.rng_seed), _INIT_STREAM]),
    )
    M = len(labels)
    priors = np.full(M, 1.0 / M)
    sigma_sq = float(config.sigma_sq_opt)
    beta = config.beta0
    anneal_active = config.anneal
    shuffle_rng = np.random.default_rng(
        np.random.SeedSequence([int(config.rng_seed), _SHUFFLE_STREAM])
    )
    matrices = data.matrices
    sample_labels = data.labels
    history = TrainHistory()
    for t in range(1, config.epochs + 1):
        if anneal_active:
            sigma_sq, beta, anneal_active = anneal_sigma(
                sigma_sq, beta, config.sigma_sq_opt,
                exponent=config.anneal_exponent,
                stop_offset=config.anneal_stop_offset,
                constant_beta=config.constant_beta,
            )
        alpha = learning_rate(t, n, config.prototypes_per_class, config.epochs,
                              config.lr_numerator_divisor, config.lr_decay_base)
        for i in shuffle_rng.permutation(m):
            _apply_euclidean_update(protos, labels, priors, matrices[i],
                                    int(sample_labels[i]), alpha, sigma_sq, tau)
        epoch_cost, train_error = _rslvq_evaluation(protos, labels, priors,
                                                    sigma_sq, data.num_classes, data)
        test_error = np.nan
        if eval_data is not None:
            _, test_error = _rslvq_evaluation(protos, labels, priors, sigma_sq,
                                              data.num_classes, eval_data)
        history.append(t, epoch_cost, train_error, test_error, sigma_sq, alpha)
    model = EuclideanRslvqModel(protos, labels, sigma_sq, tau, data.num_classes)
    return model, history


def _rslvq_evaluation(protos, labels, priors, sigma_sq, num_classes, dataset):
    sqd = _sq_frobenius_matrix(protos, dataset.matrices)
    logw = -0.5 * sqd / sigma_sq + np.log(priors)
    scores = _class_log_scores(logw, labels, num_classes)
    total = logsumexp(logw, axis=1)
    picked = scores[np.arange(len(dataset)), dataset.labels - 1]
    cost_value = float(np.sum(total - picked))
    pred = np.argmax(scores, axis=1) + 1
    error = float(np.mean(pred != dataset.labels))
    return cost_value, error


def euclidean_rslvq_predict_batch(model, Xs):
    """Predicted labels and class probabilities under the Euclidean mixture."""
    Xs = np.asarray(Xs, dtype=float)
    priors = np.full(model.num_prototypes, 1.0 / model.num_prototypes)
    sqd = _sq_frobenius_matrix(model.prototypes, Xs)
    logw = -0.5 * sqd / model.sigma_sq + np.log(priors)
    scores = _class_log_scores(logw, model.labels, model.num_classes)
    total = logsumexp(logw, axis=1)
    class_probs = np.exp(scores - total[:, None])
    return np.argmax(scores, axis=1) + 1, class_probs


def euclidean_rslvq_predict(model, X):
    """Predicted label for one input."""
    pred, _ = euclidean_rslvq_predict_batch(model, np.asarray(X, dtype=float)[None])
    return int(pred[0])
