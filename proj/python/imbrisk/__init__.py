"""Imbalanced risk modeling: resampling, classifiers, ensembles, evaluation."""

from imbrisk._core import (
    ConfigError,
    DataError,
    Dataset,
    DecisionTree,
    Ensemble,
    LinearModel,
    NumericError,
    PreprocessStats,
    __version__,
    apply_preprocess,
    auc,
    bagging_train,
    boosting_train,
    compute_metrics,
    fit_preprocess,
    generate_synthetic,
    load_csv,
    pca2,
    resample,
    roc_points,
    run_experiment,
    save_csv,
    stratified_kfold,
    train_l1lr,
    train_lr,
    train_tree,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Dataset",
    "DecisionTree",
    "Ensemble",
    "LinearModel",
    "NumericError",
    "PreprocessStats",
    "__version__",
    "apply_preprocess",
    "auc",
    "bagging_train",
    "boosting_train",
    "compute_metrics",
    "fit_preprocess",
    "generate_synthetic",
    "load_csv",
    "pca2",
    "resample",
    "roc_points",
    "run_experiment",
    "save_csv",
    "stratified_kfold",
    "train_l1lr",
    "train_lr",
    "train_tree",
]
