"""Prototype-based classification of symmetric positive definite matrices.

The package bundles the affine-invariant geometry of the SPD manifold
(:mod:`spdlvq.geometry`), a probabilistic LVQ classifier trained by
Riemannian stochastic gradient descent (:mod:`spdlvq.plrsq`), the
nearest-Riemannian-mean and Euclidean soft-LVQ baselines
(:mod:`spdlvq.baselines`), a reproducible synthetic-data generator
(:mod:`spdlvq.synthetic`), and an experiment harness with a command line
interface (:mod:`spdlvq.harness`, :mod:`spdlvq.cli`).
"""

from .baselines import (
    EuclideanRslvqModel,
    MdrmModel,
    euclidean_rslvq_predict,
    euclidean_rslvq_train,
    mdrm_predict,
    mdrm_train,
    project_to_spd,
)
from .data import LabeledDataset, covariance_from_trial
from .exceptions import (
    ConfigurationError,
    ConvergenceError,
    DomainError,
    FileFormatError,
    NumericalError,
    SpdLvqError,
    ValidationError,
)
from .geometry import (
    dist_sq_gradient,
    exp_map,
    geo_distance,
    geodesic,
    inner,
    karcher_mean,
    log_map,
    mat_exp,
    mat_invsqrt,
    mat_log,
    mat_sqrt,
    sym_eig,
)
from .harness import ExperimentConfig, run_cv, run_experiment
from .metrics import MetricsReport, kappa
from .plrsq import (
    Model,
    PosteriorReport,
    TrainConfig,
    TrainHistory,
    class_posterior,
    cost,
    f_score,
    init_prototypes,
    posteriors,
    predict,
    sgd_step,
    train,
)
from .serialization import load_dataset, load_model, save_dataset, save_model
from .synthetic import SynthSpec, eigen_profile, gen_dataset, random_orthonormal_basis

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "ConvergenceError",
    "DomainError",
    "EuclideanRslvqModel",
    "ExperimentConfig",
    "FileFormatError",
    "LabeledDataset",
    "MdrmModel",
    "MetricsReport",
    "Model",
    "NumericalError",
    "PosteriorReport",
    "SpdLvqError",
    "SynthSpec",
    "TrainConfig",
    "TrainHistory",
    "ValidationError",
    "class_posterior",
    "cost",
    "covariance_from_trial",
    "dist_sq_gradient",
    "eigen_profile",
    "euclidean_rslvq_predict",
    "euclidean_rslvq_train",
    "exp_map",
    "f_score",
    "gen_dataset",
    "geo_distance",
    "geodesic",
    "init_prototypes",
    "inner",
    "kappa",
    "karcher_mean",
    "load_dataset",
    "load_model",
    "log_map",
    "mat_exp",
    "mat_invsqrt",
    "mat_log",
    "mat_sqrt",
    "mdrm_predict",
    "mdrm_train",
    "posteriors",
    "predict",
    "project_to_spd",
    "random_orthonormal_basis",
    "run_cv",
    "run_experiment",
    "save_dataset",
    "save_model",
    "sgd_step",
    "sym_eig",
    "train",
]
