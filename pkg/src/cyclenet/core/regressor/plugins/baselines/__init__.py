from .model import KINDS, BaselineModel, fit_knn, fit_linear, fit_ridge, fit_tree

__all__ = ["KINDS", "BaselineModel", "fit_knn", "fit_linear", "fit_ridge", "fit_tree"]
