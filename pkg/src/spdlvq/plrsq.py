"""Probabilistic LVQ on the SPD manifold with geodesic distances.

The classifier is a Gaussian-like mixture with one component per labeled
prototype, ``p(X | l) ~ exp(-d(X, W_l)^2 / (2 sigma^2))`` with ``d`` the
affine-invariant geodesic distance. Training minimizes the negative log
likelihood of the correct-class posterior by stochastic Riemannian gradient
descent: every prototype moves along its tangent direction ``log_map(W_l, X)``
scaled by the posterior-based coefficient, and is mapped back to the
manifold with the exponential map. Prototypes with the sample's label are
attracted, all others are repelled.

Training is sequential over samples; a finished :class:`Model` is immutable
and safe for concurrent prediction. Runs are bit-reproducible: all
randomness derives from ``TrainConfig.rng_seed`` through named PCG64
streams (``[seed, 0]`` for prototype initialization, ``[seed, 1]`` for the
per-epoch sample permutations).
"""

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .exceptions import ConfigurationError, DomainError, ValidationError
from .geometry import (
    EIG_FLOOR,
    check_spd,
    exp_map,
    geo_distance,
    karcher_mean,
    sqrt_invsqrt_batch,
    symmetrize,
)

_INIT_STREAM = 0
_SHUFFLE_STREAM = 1


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters and schedules for prototype training.

    ``sigma_sq_opt`` is the mixture scale; with ``anneal`` enabled it cools
    geometrically each epoch (``sigma^2(t) = sigma^2(t-1) beta(t)``,
    ``beta(t) = beta(t-1)^anneal_exponent`` from ``beta(0) = beta0``) until
    it drops below ``sigma_sq_opt - anneal_stop_offset``, after which it
    stays frozen. The learning rate decays as
    ``alpha(t) = (n * xi / lr_numerator_divisor) * lr_decay_base^(t / T)``
    over epochs ``t = 1..T``. ``constant_beta`` switches to the slower
    cooling variant that keeps ``beta(t) = beta0`` throughout.
    """

    sigma_sq_opt: float
    prototypes_per_class: int = 1
    epochs: int = 100
    anneal: bool = True
    beta0: float = 0.99
    anneal_exponent: float = 1.1
    anneal_stop_offset: float = 0.4
    lr_numerator_divisor: float = 100.0
    lr_decay_base: float = 0.01
    init_perturb_scale: float = 0.01
    rng_seed: int = 0
    constant_beta: bool = False

    def validate(self):
        if not self.sigma_sq_opt > 0:
            raise ConfigurationError("sigma_sq_opt must be positive")
        if self.prototypes_per_class < 1:
            raise ConfigurationError("prototypes_per_class must be at least 1")
        if self.epochs < 1:
            raise ConfigurationError("epochs must be at least 1")
        if not 0 < self.beta0 < 1:
            raise ConfigurationError("beta0 must lie in (0, 1)")
        if self.anneal_exponent <= 0:
            raise ConfigurationError("anneal_exponent must be positive")
        if self.anneal and self.sigma_sq_opt <= self.anneal_stop_offset:
            raise ConfigurationError(
                f"annealing requires sigma_sq_opt > {self.anneal_stop_offset:g}: "
                "the stop threshold sigma_sq_opt - offset would be nonpositive"
            )
        if self.lr_numerator_divisor <= 0:
            raise ConfigurationError("lr_numerator_divisor must be positive")
        if not 0 < self.lr_decay_base < 1:
            raise ConfigurationError("lr_decay_base must lie in (0, 1)")
        if self.init_perturb_scale < 0:
            raise ConfigurationError("init_perturb_scale must be non-negative")
        if int(self.rng_seed) < 0:
            raise ConfigurationError("rng_seed must be a non-negative integer")
        return self


@dataclass(frozen=True)
class Model:
    """A trained prototype model.

    Parameters
    ----------
    prototypes : ndarray, shape (M, n, n)
        SPD prototype matrices.
    labels : ndarray, shape (M,)
        Class id of each prototype, 1-based.
    sigma_sq : float
        Mixture scale in effect (final annealed value after training).
    priors : ndarray, shape (M,)
        Mixture weights, non-negative and summing to 1.
    num_classes : int
        Number of classes ``C``.
    """

    prototypes: np.ndarray
    labels: np.ndarray
    sigma_sq: float
    priors: np.ndarray
    num_classes: int

    def __post_init__(self):
        object.__setattr__(self, "prototypes", np.asarray(self.prototypes, dtype=float))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))
        object.__setattr__(self, "priors", np.asarray(self.priors, dtype=float))

    @property
    def dim(self):
        return self.prototypes.shape[-1]

    @property
    def num_prototypes(self):
        return self.prototypes.shape[0]

    def validate(self):
        M = self.num_prototypes
        if self.prototypes.ndim != 3 or self.prototypes.shape[1] != self.prototypes.shape[2]:
            raise ValidationError(
                f"prototypes must have shape (M, n, n), got {self.prototypes.shape}"
            )
        if self.labels.shape != (M,) or self.priors.shape != (M,):
            raise ValidationError("labels and priors must have one entry per prototype")
        if M < self.num_classes:
            raise ValidationError(
                f"need at least one prototype per class: M={M} < C={self.num_classes}"
            )
        owned = set(self.labels.tolist())
        missing = set(range(1, self.num_classes + 1)) - owned
        if missing:
            raise ValidationError(f"classes without any prototype: {sorted(missing)}")
        if not owned <= set(range(1, self.num_classes + 1)):
            raise ValidationError("prototype labels outside 1..num_classes")
        if self.priors.min() < 0 or abs(self.priors.sum() - 1.0) > 1e-12:
            raise ValidationError("priors must be non-negative and sum to 1")
        if not self.sigma_sq > 0:
            raise ValidationError("sigma_sq must be positive")
        smallest = float(np.linalg.eigvalsh(self.prototypes).min())
        if smallest <= EIG_FLOOR:
            raise DomainError(
                f"model contains a non-SPD prototype (smallest eigenvalue {smallest:.3e})"
            )
        return self


@dataclass(frozen=True)
class PosteriorReport:
    """Class and prototype posteriors for one input.

    ``class_probs[k-1]`` is the probability of class ``k``;
    ``prototype_probs[l]`` the posterior of mixture component ``l``.
    ``predicted`` is the argmax class, ties resolved to the lowest id.
    """

    class_probs: np.ndarray
    prototype_probs: np.ndarray
    predicted: int


@dataclass
class TrainHistory:
    """Per-epoch training trace."""

    epoch: list = field(default_factory=list)
    cost: list = field(default_factory=list)
    train_error: list = field(default_factory=list)
    test_error: list = field(default_factory=list)
    sigma_sq: list = field(default_factory=list)
    alpha: list = field(default_factory=list)

    def append(self, epoch, cost, train_error, test_error, sigma_sq, alpha):
        self.epoch.append(epoch)
        self.cost.append(cost)
        self.train_error.append(train_error)
        self.test_error.append(test_error)
        self.sigma_sq.append(sigma_sq)
        self.alpha.append(alpha)

    def __len__(self):
        return len(self.epoch)

    def rows(self):
        """Rows of (epoch, cost, train_error, test_error, sigma_sq, alpha)."""
        return list(
            zip(self.epoch, self.cost, self.train_error, self.test_error,
                self.sigma_sq, self.alpha)
        )


def learning_rate(t, n, xi, total_epochs, numerator_divisor=100.0, decay_base=0.01):
    """Learning rate at epoch ``t`` of ``total_epochs``.

    ``alpha(t) = (n * xi / numerator_divisor) * decay_base^(t / total_epochs)``
    for matrix dimension ``n`` and ``xi`` prototypes per class; strictly
    decreasing in ``t`` for ``decay_base < 1``.
    """
    return (n * xi / numerator_divisor) * decay_base ** (t / total_epochs)


def anneal_sigma(sigma_sq, beta, sigma_sq_opt, exponent=1.1, stop_offset=0.4,
                 constant_beta=False):
    """One epoch of the geometric cooling schedule for the mixture scale.

    Updates ``beta <- beta^exponent`` (or keeps it constant in the
    slow-cooling variant) and ``sigma_sq <- sigma_sq * beta``. Cooling
    deactivates permanently once the new value falls below
    ``sigma_sq_opt - stop_offset``; the caller keeps the returned value
    frozen from then on.

    Returns
    -------
    (float, float, bool)
        New ``sigma_sq``, new ``beta``, and whether annealing remains active.
    """
    if sigma_sq_opt <= stop_offset:
        raise ConfigurationError(
            f"sigma_sq_opt must exceed the stop offset {stop_offset:g}"
        )
    new_beta = beta if constant_beta else beta ** exponent
    new_sigma = sigma_sq * new_beta
    active = not new_sigma < sigma_sq_opt - stop_offset
    return new_sigma, new_beta, active


def f_score(X, W, sigma_sq):
    """Mixture log-score ``-d(X, W)^2 / (2 sigma_sq)`` of one prototype."""
    if not sigma_sq > 0:
        raise ValidationError("sigma_sq must be positive")
    return -0.5 * geo_distance(X, W, squared=True) / sigma_sq


def _sq_dists_to_prototypes(isq, X):
    """Squared geodesic distances of one matrix to all cached prototypes.

    ``isq`` holds the prototypes' inverse square roots, shape (M, n, n).
    Returns the distances together with the congruence eigendecompositions
    so the caller can reuse them for tangent updates.
    """
    A = symmetrize(isq @ X @ isq)
    lam, U = np.linalg.eigh(A)
    if float(lam.min()) <= EIG_FLOOR:
        raise DomainError(
            "sample is not positive definite relative to a prototype "
            f"(congruence eigenvalue {float(lam.min()):.3e})"
        )
    loglam = np.log(lam)
    sq_dists = np.einsum("ij,ij->i", loglam, loglam)
    return sq_dists, loglam, U


def _sq_dist_matrix(isq, Xs):
    """Squared geodesic distances of a dataset to all cached prototypes, (m, M)."""
    m = Xs.shape[0]
    M = isq.shape[0]
    out = np.empty((m, M))
    for l in range(M):
        lam = np.linalg.eigvalsh(symmetrize(isq[l] @ Xs @ isq[l]))
        if float(lam.min()) <= EIG_FLOOR:
            raise DomainError(
                "dataset contains a sample that is not positive definite "
                "relative to a prototype"
            )
        logs = np.log(lam)
        out[:, l] = np.einsum("ij,ij->i", logs, logs)
    return out


def _posteriors_from_sq_dists(sq_dists, labels, priors, y, sigma_sq):
    """Within-class and overall component posteriors for one observation.

    Exponents are max-shifted for stability. If every correct-class weight
    underflows under the global shift, the within-class posterior falls back
    to its own shift so it stays exactly normalized.
    """
    mask = labels == y
    if not mask.any():
        raise ValidationError(f"no prototype carries class {y}")
    f = -0.5 * sq_dists / sigma_sq
    w = priors * np.exp(f - f.max())
    p_all = w / w.sum()
    class_total = w[mask].sum()
    p_class = np.zeros_like(p_all)
    if class_total > 0.0:
        p_class[mask] = w[mask] / class_total
    else:
        fy = f[mask]
        wy = priors[mask] * np.exp(fy - fy.max())
        p_class[mask] = wy / wy.sum()
    return p_class, p_all


def posteriors(model, X, y):
    """Component posteriors of ``X`` within class ``y`` and overall.

    Parameters
    ----------
    model : Model
    X : ndarray, shape (n, n)
        SPD input.
    y : int
        Class id in ``1..num_classes``.

    Returns
    -------
    (ndarray, ndarray)
        ``p_class`` (zero outside class ``y``) and ``p_all``, each of
        length ``M`` and summing to 1.
    """
    if not 1 <= y <= model.num_classes:
        raise ValidationError(f"class id {y} outside 1..{model.num_classes}")
    _, isq = sqrt_invsqrt_batch(model.prototypes)
    sq_dists, _, _ = _sq_dists_to_prototypes(isq, np.asarray(X, dtype=float))
    return _posteriors_from_sq_dists(sq_dists, model.labels, model.priors, y,
                                     model.sigma_sq)


def _class_log_scores(logw, labels, num_classes):
    """Per-class log of summed component weights, shape (m, C)."""
    m = logw.shape[0]
    scores = np.full((m, num_classes), -np.inf)
    for k in range(1, num_classes + 1):
        cols = labels == k
        if cols.any():
            scores[:, k - 1] = logsumexp(logw[:, cols], axis=1)
    return scores


def class_posterior(model, X):
    """Class posteriors of one input under the mixture.

    ``class_probs[k-1]`` sums the posterior mass of all prototypes of class
    ``k``; the prediction is the argmax with ties broken toward the lowest
    class id.
    """
    X = np.asarray(X, dtype=float)
    _, isq = sqrt_invsqrt_batch(model.prototypes)
    sq_dists, _, _ = _sq_dists_to_prototypes(isq, X)
    logw = -0.5 * sq_dists / model.sigma_sq + np.log(model.priors)
    total = logsumexp(logw)
    prototype_probs = np.exp(logw - total)
    scores = _class_log_scores(logw[None, :], model.labels, model.num_classes)[0]
    class_probs = np.exp(scores - total)
    return PosteriorReport(class_probs, prototype_probs, int(np.argmax(class_probs)) + 1)


def predict(model, X):
    """Alias of :func:`class_posterior`: posterior report with the winner class."""
    return class_posterior(model, X)


def predict_batch(model, Xs):
    """Predicted labels and class probabilities for a stack of inputs.

    Returns
    -------
    (ndarray, ndarray)
        Labels of shape (m,) and class probabilities of shape (m, C).
    """
    Xs = np.asarray(Xs, dtype=float)
    _, isq = sqrt_invsqrt_batch(model.prototypes)
    sqd = _sq_dist_matrix(isq, Xs)
    logw = -0.5 * sqd / model.sigma_sq + np.log(model.priors)
    scores = _class_log_scores(logw, model.labels, model.num_classes)
    total = logsumexp(logw, axis=1)
    class_probs = np.exp(scores - total[:, None])
    pred = np.argmax(scores, axis=1) + 1
    return pred, class_probs


def cost(model, data):
    """Negative log likelihood of the correct-class posteriors.

    ``E = sum_i [ -log sum_{l: c_l = y_i} P(l) e^{f_l} + log sum_l P(l) e^{f_l} ]``,
    which equals ``-sum_i log class_posterior(X_i)[y_i]`` and is always
    non-negative.
    """
    if len(data) == 0:
        raise ValidationError("dataset is empty")
    _, isq = sqrt_invsqrt_batch(model.prototypes)
    sqd = _sq_dist_matrix(isq, data.matrices)
    logw = -0.5 * sqd / model.sigma_sq + np.log(model.priors)
    scores = _class_log_scores(logw, model.labels, model.num_classes)
    total = logsumexp(logw, axis=1)
    picked = scores[np.arange(len(data)), data.labels - 1]
    return float(np.sum(total - picked))


def _apply_update(protos, sq, isq, labels, priors, X, y, alpha, sigma_sq):
    """One stochastic update of all prototypes, in place.

    Posteriors are computed from the pre-update prototypes, then every
    prototype moves by ``exp_map(W_l, c_l * log_map(W_l, X))`` where ``c_l``
    is ``(alpha / sigma_sq) (P_class - P_all)`` for correct-class prototypes
    and ``-(alpha / sigma_sq) P_all`` otherwise. The exponential reuses the
    congruence eigendecomposition of the distance computation:
    ``exp_map(W, c log_map(W, X)) = W^{1/2} (W^{-1/2} X W^{-1/2})^c W^{1/2}``.
    """
    sq_dists, loglam, U = _sq_dists_to_prototypes(isq, X)
    p_class, p_all = _posteriors_from_sq_dists(sq_dists, labels, priors, y, sigma_sq)
    mask = labels == y
    # Attraction for the correct class, repulsion otherwise.
    assert np.all(p_class[mask] >= p_all[mask])
    coeff = np.where(mask, p_class - p_all, -p_all) * (alpha / sigma_sq)
    moving = np.flatnonzero(coeff)
    if moving.size == 0:
        return p_class, p_all
    scale = np.exp(coeff[moving, None] * loglam[moving])
    Um = U[moving]
    B = (Um * scale[:, None, :]) @ np.swapaxes(Um, -1, -2)
    Wn = symmetrize(sq[moving] @ B @ sq[moving])
    lam_n, U_n = np.linalg.eigh(Wn)
    if float(lam_n.min()) <= EIG_FLOOR:
        raise DomainError(
            f"prototype update left the SPD cone (eigenvalue {float(lam_n.min()):.3e})"
        )
    root = np.sqrt(lam_n)[:, None, :]
    U_nt = np.swapaxes(U_n, -1, -2)
    protos[moving] = Wn
    sq[moving] = symmetrize((U_n * root) @ U_nt)
    isq[moving] = symmetrize((U_n / root) @ U_nt)
    return p_class, p_all


def sgd_step(model, X, y, alpha):
    """One stochastic gradient step on a copy of the model.

    Parameters
    ----------
    model : Model
    X : ndarray, shape (n, n)
        SPD observation.
    y : int
        Its class id.
    alpha : float
        Learning rate, in ``(0, 1)``.

    Returns
    -------
    Model
        New model with all prototypes updated from the pre-step posteriors.
    """
    if not 0 < alpha < 1:
        raise ConfigurationError(f"learning rate must lie in (0, 1), got {alpha}")
    if not 1 <= y <= model.num_classes:
        raise ValidationError(f"class id {y} outside 1..{model.num_classes}")
    X = check_spd(np.asarray(X, dtype=float), "sample")
    protos = model.prototypes.copy()
    sq, isq = sqrt_invsqrt_batch(protos)
    _apply_update(protos, sq, isq, model.labels, model.priors, X, y, alpha,
                  model.sigma_sq)
    return dataclasses.replace(model, prototypes=protos)


def init_prototypes(data, prototypes_per_class, perturb, seed):
    """Class-wise Karcher means plus a small random tangent perturbation.

    For each class the Karcher mean of its samples is computed and
    ``prototypes_per_class`` prototypes are emitted as
    ``exp_map(mean, P)`` with ``P`` a symmetrized matrix of i.i.d.
    ``N(0, perturb^2)`` entries. With ``perturb = 0`` the prototypes equal
    the class means exactly. Deterministic for a given seed.

    Returns
    -------
    (ndarray, ndarray)
        Prototypes of shape (C * xi, n, n) and their labels, class-major.
    """
    if prototypes_per_class < 1:
        raise ConfigurationError("prototypes_per_class must be at least 1")
    if perturb < 0:
        raise ConfigurationError("perturbation scale must be non-negative")
    rng = np.random.default_rng(seed)
    n = data.dim
    protos = []
    labels = []
    for k in range(1, data.num_classes + 1):
        idx = data.class_indices(k)
        if idx.size == 0:
            raise ValidationError(f"class {k} has no samples")
        mean = karcher_mean(data.matrices[idx])
        for _ in range(prototypes_per_class):
            if perturb > 0:
                P = symmetrize(rng.normal(0.0, perturb, size=(n, n)))
                protos.append(exp_map(mean, P))
            else:
                protos.append(mean.copy())
            labels.append(k)
    return np.stack(protos), np.asarray(labels, dtype=np.int64)


def _evaluation(isq, labels, priors, sigma_sq, num_classes, dataset):
    """Cost and error rate of the current prototypes on a dataset."""
    sqd = _sq_dist_matrix(isq, dataset.matrices)
    logw = -0.5 * sqd / sigma_sq + np.log(priors)
    scores = _class_log_scores(logw, labels, num_classes)
    total = logsumexp(logw, axis=1)
    picked = scores[np.arange(len(dataset)), dataset.labels - 1]
    cost_value = float(np.sum(total - picked))
    pred = np.argmax(scores, axis=1) + 1
    error = float(np.mean(pred != dataset.labels))
    return cost_value, error


def train(data, config, eval_data=None, callback=None):
    """Train a prototype model by stochastic Riemannian gradient descent.

    Runs ``config.epochs`` sweeps; each sweep visits every training sample
    once in a fresh seeded random permutation with the learning rate held
    fixed within the epoch. When annealing is enabled the mixture scale
    cools once per epoch (before the sweep) until its stop threshold.
    Class priors are uniform, ``P(l) = 1/M``.

    Parameters
    ----------
    data : LabeledDataset
        Training set; every class must be non-empty.
    config : TrainConfig
    eval_data : LabeledDataset, optional
        Extra dataset whose error rate is recorded per epoch.
    callback : callable, optional
        Called after each epoch with a dict of the history row.

    Returns
    -------
    (Model, TrainHistory)
    """
    config.validate()
    data.validate()
    n = data.dim
    m = len(data)
    protos, labels = init_prototypes(
        data,
        config.prototypes_per_class,
        config.init_perturb_scale,
        seed=np.random.SeedSequence([int(config.rng_seed), _INIT_STREAM]),
    )
    M = len(labels)
    priors = np.full(M, 1.0 / M)
    sq, isq = sqrt_invsqrt_batch(protos)
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
            try:
                _apply_update(protos, sq, isq, labels, priors,
                              matrices[i], int(sample_labels[i]), alpha, sigma_sq)
            except Exception as err:
                err.args = (f"epoch {t}, sample {i}: {err.args[0] if err.args else err}",)
                raise
        epoch_cost, train_error = _evaluation(isq, labels, priors, sigma_sq,
                                              data.num_classes, data)
        test_error = np.nan
        if eval_data is not None:
            _, test_error = _evaluation(isq, labels, priors, sigma_sq,
                                        data.num_classes, eval_data)
        history.append(t, epoch_cost, train_error, test_error, sigma_sq, alpha)
        if callback is not None:
            callback({"epoch": t, "cost": epoch_cost, "train_error": train_error,
                      "test_error": test_error, "sigma_sq": sigma_sq, "alpha": alpha})
    model = Model(protos, labels, sigma_sq, priors, data.num_classes)
    return model, history
