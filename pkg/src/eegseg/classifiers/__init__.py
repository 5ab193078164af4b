"""KNN, MLP and gradient-boosted-tree identification behind one train/predict contract."""
from .base import LabeledSet, TrainedModel, evaluate, load_model, save_model
from .gbt import GbtModel, GbtParams, train_gbt
from .knn import KnnModel, train_knn
from .mlp import (ALPHA_HIDDEN, STEW_HIDDEN, MlpConfig, MlpModel, TrainingError,
                  mlp_gradient_check, train_mlp)
from .protocol import (ClassifierSpec, EvalReport, FeatureSet, Protocol, derive_seed,
                       prepare_fold, repeated_eval, stratified_split)

__all__ = [
    "ALPHA_HIDDEN", "STEW_HIDDEN", "ClassifierSpec", "EvalReport", "FeatureSet",
    "GbtModel", "GbtParams", "KnnModel", "LabeledSet", "MlpConfig", "MlpModel",
    "Protocol", "TrainedModel", "TrainingError", "derive_seed", "evaluate",
    "load_model", "mlp_gradient_check", "prepare_fold", "repeated_eval", "save_model",
    "stratified_split", "train_gbt", "train_knn", "train_mlp",
]
