"""Count-regression model families behind one fit/predict/importance contract."""
from .base import (FAMILIES, DesignMatrix, Scaler, TrainedModel, feature_importance, fit,
                   fit_adaboost, fit_elasticnet, fit_poisson, fit_random_forest, load_model,
                   predict, save_model)
from .tree import RegressionTree, fit_tree

__all__ = [
    "FAMILIES", "DesignMatrix", "Scaler", "TrainedModel", "RegressionTree", "feature_importance",
    "fit", "fit_adaboost", "fit_elasticnet", "fit_poisson", "fit_random_forest", "fit_tree",
    "load_model", "predict", "save_model",
]
