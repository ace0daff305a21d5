"""Classification metrics and aggregated experiment reports."""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError


def kappa(accuracy, num_classes):
    """Chance-corrected accuracy for balanced classes.

    ``kappa = (accuracy - 1/C) / (1 - 1/C)``; it is 0 at chance level and
    1 exactly when accuracy is 1.

    Parameters
    ----------
    accuracy : float
        Accuracy in ``[0, 1]``.
    num_classes : int
        Number of balanced classes, at least 2.

    Returns
    -------
    float
    """
    if num_classes < 2:
        raise ValidationError("kappa requires at least 2 classes")
    if not 0.0 <= accuracy <= 1.0:
        raise ValidationError(f"accuracy must lie in [0, 1], got {accuracy}")
    chance = 1.0 / num_classes
    return (accuracy - chance) / (1.0 - chance)


def confusion_matrix(true_labels, predicted_labels, num_classes):
    """Confusion counts with rows indexed by the true class, shape (C, C)."""
    true_labels = np.asarray(true_labels, dtype=np.int64)
    predicted_labels = np.asarray(predicted_labels, dtype=np.int64)
    if true_labels.shape != predicted_labels.shape:
        raise ValidationError("label arrays must have the same shape")
    for arr, name in ((true_labels, "true"), (predicted_labels, "predicted")):
        if arr.size and (arr.min() < 1 or arr.max() > num_classes):
            raise ValidationError(f"{name} labels outside 1..{num_classes}")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (true_labels - 1, predicted_labels - 1), 1)
    return counts


def accuracy_from_confusion(counts):
    """Trace over total of a confusion matrix."""
    counts = np.asarray(counts)
    total = counts.sum()
    if total == 0:
        raise ValidationError("confusion matrix is empty")
    return float(np.trace(counts)) / float(total)


@dataclass
class MetricsReport:
    """Aggregated results of repeated classification runs.

    ``accuracy`` is the pooled accuracy (trace over total of the summed
    confusion matrix); because runs have equal test sizes it coincides with
    the mean of ``per_run_accuracy``. ``kappa`` is the matching
    chance-corrected value.
    """

    method: str
    num_classes: int
    per_run_accuracy: list = field(default_factory=list)
    confusion: np.ndarray = None

    def __post_init__(self):
        if self.confusion is None:
            self.confusion = np.zeros((self.num_classes, self.num_classes), dtype=np.int64)
        else:
            self.confusion = np.asarray(self.confusion, dtype=np.int64)

    @property
    def runs(self):
        return len(self.per_run_accuracy)

    @property
    def accuracy(self):
        return accuracy_from_confusion(self.confusion)

    @property
    def accuracy_std(self):
        return float(np.std(self.per_run_accuracy))

    @property
    def kappa(self):
        return kappa(self.accuracy, self.num_classes)

    @property
    def per_run_kappa(self):
        return [kappa(a, self.num_classes) for a in self.per_run_accuracy]

    def add_run(self, true_labels, predicted_labels):
        """Accumulate one run's predictions."""
        counts = confusion_matrix(true_labels, predicted_labels, self.num_classes)
        self.confusion = self.confusion + counts
        self.per_run_accuracy.append(accuracy_from_confusion(counts))

    def to_dict(self):
        return {
            "method": self.method,
            "num_classes": self.num_classes,
            "runs": self.runs,
            "accuracy": self.accuracy,
            "accuracy_std": self.accuracy_std,
            "kappa": self.kappa,
            "per_run_accuracy": list(self.per_run_accuracy),
            "confusion": self.confusion.tolist(),
        }
