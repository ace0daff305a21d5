"""Labeled collections of SPD matrices and covariance-descriptor construction."""

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, ValidationError
from .geometry import EIG_FLOOR, sym_tol, symmetrize


@dataclass(frozen=True)
class LabeledDataset:
    """A set of SPD matrices with class labels in ``{1..num_classes}``.

    Parameters
    ----------
    matrices : ndarray, shape (m, n, n)
        SPD matrices, one per sample.
    labels : ndarray, shape (m,)
        Integer class ids, 1-based.
    num_classes : int
        Total number of classes ``C``.
    """

    matrices: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        object.__setattr__(self, "matrices", np.asarray(self.matrices, dtype=float))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))

    def __len__(self):
        return self.matrices.shape[0]

    @property
    def dim(self):
        return self.matrices.shape[-1]

    def validate(self, check_spd=True):
        """Check shapes, label range and (optionally) positive definiteness."""
        if self.matrices.ndim != 3 or self.matrices.shape[1] != self.matrices.shape[2]:
            raise ValidationError(
                f"matrices must have shape (m, n, n), got {self.matrices.shape}"
            )
        if self.labels.shape != (len(self),):
            raise ValidationError(
                f"labels must have shape ({len(self)},), got {self.labels.shape}"
            )
        if len(self) == 0:
            raise ValidationError("dataset is empty")
        if self.num_classes < 1:
            raise ValidationError("num_classes must be positive")
        if self.labels.min() < 1 or self.labels.max() > self.num_classes:
            raise ValidationError(
                f"labels must lie in 1..{self.num_classes}, "
                f"got range {self.labels.min()}..{self.labels.max()}"
            )
        if check_spd:
            skew = np.abs(self.matrices - np.swapaxes(self.matrices, -1, -2)).max()
            if skew > sym_tol(self.matrices):
                raise ValidationError(f"dataset contains a non-symmetric matrix (skew {skew:.3e})")
            smallest = float(np.linalg.eigvalsh(self.matrices).min())
            if smallest <= EIG_FLOOR:
                raise DomainError(
                    f"dataset contains a non-SPD matrix (smallest eigenvalue {smallest:.3e})"
                )
        return self

    def class_indices(self, label):
        """Indices of the samples with the given class id."""
        return np.flatnonzero(self.labels == label)

    def class_counts(self):
        """Per-class sample counts as an array of length ``num_classes``."""
        return np.bincount(self.labels, minlength=self.num_classes + 1)[1:]

    def subset(self, indices):
        """Dataset restricted to the given sample indices (copying)."""
        indices = np.asarray(indices)
        return LabeledDataset(
            self.matrices[indices].copy(), self.labels[indices].copy(), self.num_classes
        )


def concat_datasets(first, second):
    """Concatenate two datasets with the same dimension and class count."""
    if first.num_classes != second.num_classes:
        raise ValidationError("datasets have different class counts")
    if first.dim != second.dim:
        raise ValidationError("datasets have different matrix dimensions")
    return LabeledDataset(
        np.concatenate([first.matrices, second.matrices]),
        np.concatenate([first.labels, second.labels]),
        first.num_classes,
    )


def covariance_from_trial(E):
    """Sample covariance descriptor of one multichannel trial.

    Rows of ``E`` are channels, columns are time samples. Each row is
    centered, then ``X = E E.T / (l - 1)`` is formed.

    Parameters
    ----------
    E : ndarray, shape (n, l)
        Trial with ``l >= 2`` samples of an ``n``-channel signal.

    Returns
    -------
    ndarray, shape (n, n)
        The SPD covariance matrix.

    Raises
    ------
    ValidationError
        If fewer than two time samples are given.
    DomainError
        If the trial is rank deficient, so the covariance is only positive
        semi-definite; regularize or drop such trials upstream.
    """
    E = np.asarray(E, dtype=float)
    if E.ndim != 2:
        raise ValidationError(f"trial must be a 2-D array, got shape {E.shape}")
    n, length = E.shape
    if length < 2:
        raise ValidationError(f"trial needs at least 2 time samples, got {length}")
    centered = E - E.mean(axis=1, keepdims=True)
    X = symmetrize(centered @ centered.T / (length - 1))
    smallest = float(np.linalg.eigvalsh(X)[0])
    if smallest <= EIG_FLOOR:
        raise DomainError(
            f"trial covariance is rank deficient (smallest eigenvalue {smallest:.3e}); "
            "consider shrinkage regularization or longer trials"
        )
    return X
