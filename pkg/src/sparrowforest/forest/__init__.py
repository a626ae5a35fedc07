from .backend import BACKEND, GAIN_EPS
from .core import (
    ConfusionMatrix,
    Forest,
    HyperParams,
    Tree,
    best_split,
    bootstrap_sample,
    evaluate,
    fit,
    forest_from_dict,
    forest_to_dict,
    impurity,
    load_forest,
    predict,
    predict_row,
    save_forest,
)

__all__ = [
    "BACKEND",
    "GAIN_EPS",
    "ConfusionMatrix",
    "Forest",
    "HyperParams",
    "Tree",
    "best_split",
    "bootstrap_sample",
    "evaluate",
    "fit",
    "forest_from_dict",
    "forest_to_dict",
    "impurity",
    "load_forest",
    "predict",
    "predict_row",
    "save_forest",
]
