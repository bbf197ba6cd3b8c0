"""Classifiers, cross-validation and importance analysis."""

from .importance import (ImportanceTable, correlation_matrix, dense_rank_desc, mutual_information,
                         mutual_information_all, rank_aggregate)
from .models import (MODEL_KINDS, GaussianNB, GbParams, GnbParams, GradientBoosting, RandomForest,
                     RfParams, impurity_importance, make_model, predict, predict_gnb,
                     train_gnb, train_gradient_boosting, train_random_forest)
from .validation import CvReport, cross_validate, stratified_kfold

__all__ = [
    "ImportanceTable", "correlation_matrix", "dense_rank_desc", "mutual_information",
    "mutual_information_all", "rank_aggregate", "MODEL_KINDS", "GaussianNB", "GbParams",
    "GnbParams", "GradientBoosting", "RandomForest", "RfParams", "impurity_importance",
    "make_model", "predict", "predict_gnb", "train_gnb", "train_gradient_boosting",
    "train_random_forest", "CvReport", "cross_validate", "stratified_kfold",
]
