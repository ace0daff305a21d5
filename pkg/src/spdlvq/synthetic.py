"""Synthetic SPD classification problems built from noisy spectral models.

Each class is defined by an eigenvalue profile and an orthonormal basis; an
instance is assembled as ``X = sum_j lambda_j u_j u_j^T`` where the
``lambda_j`` are drawn uniformly around the profile values and the ``u_j``
come from Gram-Schmidt orthogonalization of the noise-perturbed basis.

Randomness is fully reproducible: every random quantity has its own named
PCG64 stream keyed by integers, so regenerating with the same spec yields
bit-identical datasets and the three splits are mutually independent:

* basis ``k``          -> ``SeedSequence([seed, 0, k])``
* instance ``i`` of class ``c`` in split ``s``
                       -> ``SeedSequence([seed, 1, s, c, i])``

with split indices 0, 1, 2 for train, validation, test.
"""

from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset
from .exceptions import ConfigurationError, NumericalError, ValidationError
from .geometry import symmetrize

_BASIS_STREAM = 0
_INSTANCE_STREAM = 1
_SPLIT_NAMES = ("train", "validation", "test")

#: (profile_id, basis_id) pairs per class for the two standard problems.
SYN1_CLASS_PAIRS = ((1, 1), (1, 2), (2, 1), (2, 2))
SYN2_CLASS_PAIRS = ((1, 1), (2, 1), (3, 1), (4, 1))


def eigen_profile(profile_id, n):
    """One of the four eigenvalue profiles, normalized to mean 1.

    The raw profiles over ``j = 1..n`` are linearly decreasing ``13 - j``,
    exponentially decreasing ``1 + 100 exp(-0.5 j)``, linearly decreasing
    with a flatter slope ``13 - 0.5 j``, and reciprocal ``1 / j``. Each is
    rescaled by ``n / sum`` so the eigenvalue mean is exactly 1.

    Parameters
    ----------
    profile_id : int
        Profile selector in ``{1, 2, 3, 4}``.
    n : int
        Matrix dimension.

    Returns
    -------
    ndarray, shape (n,)
        Positive profile values with mean 1.
    """
    if n < 1:
        raise ValidationError(f"profile length must be at least 1, got {n}")
    j = np.arange(1, n + 1, dtype=float)
    if profile_id == 1:
        raw = 13.0 - j
    elif profile_id == 2:
        raw = 1.0 + 100.0 * np.exp(-0.5 * j)
    elif profile_id == 3:
        raw = 13.0 - 0.5 * j
    elif profile_id == 4:
        raw = 1.0 / j
    else:
        raise ValidationError(f"unknown eigenvalue profile id {profile_id}")
    if raw.min() <= 0:
        raise ValidationError(
            f"profile {profile_id} is not positive for n={n}"
        )
    return n * raw / raw.sum()


def gram_schmidt(columns, tol=1e-10):
    """Orthonormalize the columns of a matrix in order (modified Gram-Schmidt).

    Raises
    ------
    NumericalError
        If a column is (numerically) linearly dependent on its predecessors.
    """
    V = np.array(columns, dtype=float)
    if V.ndim != 2:
        raise ValidationError(f"expected a 2-D array of columns, got shape {V.shape}")
    n, k = V.shape
    Q = np.empty_like(V)
    for j in range(k):
        v = V[:, j].copy()
        original_norm = np.linalg.norm(v)
        for i in range(j):
            v -= (Q[:, i] @ v) * Q[:, i]
        norm = np.linalg.norm(v)
        if norm <= tol * max(original_norm, 1.0):
            raise NumericalError(
                f"column {j} is linearly dependent on earlier columns"
            )
        Q[:, j] = v / norm
    return Q


def random_orthonormal_basis(n, seed):
    """Random orthonormal basis from Gram-Schmidt on a standard-normal matrix.

    Deterministic for a given seed. If a drawn column happens to be
    numerically dependent on the previous ones, it is redrawn.
    """
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(n, n))
    Q = np.empty((n, n))
    for j in range(n):
        while True:
            v = V[:, j].copy()
            original_norm = np.linalg.norm(v)
            for i in range(j):
                v -= (Q[:, i] @ v) * Q[:, i]
            norm = np.linalg.norm(v)
            if norm > 1e-10 * max(original_norm, 1.0):
                break
            V[:, j] = rng.normal(size=n)
        Q[:, j] = v / norm
    return Q


def sample_instance(profile, basis, epsilon, nu, rng):
    """Draw one SPD instance from a spectral class model.

    Eigenvalues are drawn independently from ``U(profile_j - epsilon,
    profile_j + epsilon)``; eigenvectors are the Gram-Schmidt
    orthogonalization of the basis columns after adding i.i.d.
    ``N(0, nu^2)`` noise to every entry.

    Parameters
    ----------
    profile : ndarray, shape (n,)
        Positive eigenvalue profile.
    basis : ndarray, shape (n, n)
        Orthonormal basis, eigenvectors as columns.
    epsilon : float
        Half-width of the uniform eigenvalue noise; must stay below the
        smallest profile value so all eigenvalues remain positive.
    nu : float
        Standard deviation of the Gaussian eigenvector noise.
    rng : numpy.random.Generator
        Source of randomness; eigenvalues are drawn first, then the
        eigenvector noise.

    Returns
    -------
    ndarray, shape (n, n)
        SPD matrix ``sum_j lambda_j u_j u_j^T``.
    """
    profile = np.asarray(profile, dtype=float)
    n = profile.shape[0]
    if epsilon < 0 or nu < 0:
        raise ConfigurationError("noise levels must be non-negative")
    if epsilon >= profile.min():
        raise ConfigurationError(
            f"epsilon {epsilon:g} must be below the smallest profile value "
            f"{profile.min():g} to keep eigenvalues positive"
        )
    lam = rng.uniform(profile - epsilon, profile + epsilon)
    noise = rng.normal(0.0, nu, size=(n, n)) if nu > 0 else np.zeros((n, n))
    U = gram_schmidt(np.asarray(basis, dtype=float) + noise)
    return symmetrize((U * lam) @ U.T)


@dataclass(frozen=True)
class SynthSpec:
    """Specification of one synthetic dataset generation run.

    ``class_pairs`` maps each class to its (profile_id, basis_id) pair; the
    two standard problems are exposed as :meth:`syn1` and :meth:`syn2`.
    """

    name: str
    seed: int
    n: int = 10
    class_pairs: tuple = SYN1_CLASS_PAIRS
    epsilon: float = 0.1
    nu: float = 0.3
    instances_per_class: int = 250

    def __post_init__(self):
        if self.instances_per_class < 1:
            raise ConfigurationError("instances_per_class must be positive")
        if int(self.seed) < 0:
            raise ConfigurationError("seed must be non-negative")

    @property
    def num_classes(self):
        return len(self.class_pairs)

    @classmethod
    def syn1(cls, seed, instances_per_class=250):
        """Four classes from two profiles crossed with two bases."""
        return cls("SynI", seed, class_pairs=SYN1_CLASS_PAIRS,
                   instances_per_class=instances_per_class)

    @classmethod
    def syn2(cls, seed, instances_per_class=250):
        """Four classes from four profiles sharing one basis."""
        return cls("SynII", seed, class_pairs=SYN2_CLASS_PAIRS,
                   instances_per_class=instances_per_class)

    @classmethod
    def by_name(cls, name, seed, instances_per_class=250):
        lowered = name.lower()
        if lowered in ("syni", "syn1"):
            return cls.syn1(seed, instances_per_class)
        if lowered in ("synii", "syn2"):
            return cls.syn2(seed, instances_per_class)
        raise ConfigurationError(f"unknown synthetic dataset {name!r}")


def gen_dataset(spec):
    """Generate independent train, validation and test splits.

    Each split holds ``instances_per_class`` samples per class, emitted
    class-major. Identical specs reproduce bit-identical splits.

    Returns
    -------
    (LabeledDataset, LabeledDataset, LabeledDataset)
        Train, validation and test splits.
    """
    profiles = {pid: eigen_profile(pid, spec.n) for pid, _ in spec.class_pairs}
    bases = {
        bid: random_orthonormal_basis(
            spec.n, np.random.SeedSequence([spec.seed, _BASIS_STREAM, bid])
        )
        for bid in sorted({b for _, b in spec.class_pairs})
    }
    splits = []
    for split_idx in range(len(_SPLIT_NAMES)):
        count = spec.num_classes * spec.instances_per_class
        matrices = np.empty((count, spec.n, spec.n))
        labels = np.empty(count, dtype=np.int64)
        pos = 0
        for class_idx, (pid, bid) in enumerate(spec.class_pairs, start=1):
            for instance_idx in range(spec.instances_per_class):
                rng = np.random.default_rng(
                    np.random.SeedSequence(
                        [spec.seed, _INSTANCE_STREAM, split_idx, class_idx, instance_idx]
                    )
                )
                matrices[pos] = sample_instance(
                    profiles[pid], bases[bid], spec.epsilon, spec.nu, rng
                )
                labels[pos] = class_idx
                pos += 1
        splits.append(LabeledDataset(matrices, labels, spec.num_classes))
    return tuple(splits)
