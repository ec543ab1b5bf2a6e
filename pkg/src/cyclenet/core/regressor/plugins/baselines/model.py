from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from cyclenet.core.dataset import Dataset, ScalerParams
from cyclenet.core.regressor.interface import IRegressor

from .knn import predict_knn
from .linear import fit_ols, fit_ridge_coefficients, predict_linear
from .tree import FlatTree, grow_tree

KINDS = ("lm", "rg", "knn", "dt")


@dataclass(eq=False)
class BaselineModel(IRegressor):
    """One classical regressor per output, fitted on scaled data

    Attributes:
        kind:           'lm', 'rg', 'knn' or 'dt'.
        scalers:        Scalers of the training data.
        coefficients:   (11, 5) intercept and slopes of 'lm' and 'rg'.
        train_x:        Scaled training inputs kept by 'knn'.
        train_y:        Scaled training outputs kept by 'knn'.
        trees:          One tree per output for 'dt'.
        hyper:          Hyperparameters the model was fitted with.
    """

    kind: str
    scalers: Optional[ScalerParams] = None
    coefficients: Optional[np.ndarray] = None
    train_x: Optional[np.ndarray] = None
    train_y: Optional[np.ndarray] = None
    trees: List[FlatTree] = field(default_factory=list)
    hyper: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown baseline kind '{self.kind}', expected one of {KINDS}")

    @property
    def n_outputs(self) -> int:
        if self.kind in ("lm", "rg"):
            return int(self.coefficients.shape[1])
        if self.kind == "knn":
            return int(self.train_y.shape[1])
        return len(self.trees)

    def predict_scaled(self, inputs: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(inputs, dtype=float))
        if self.kind in ("lm", "rg"):
            return predict_linear(self.coefficients, x)
        if self.kind == "knn":
            return predict_knn(self.train_x, self.train_y, x, self.hyper["k"])
        return np.column_stack([tree.predict(x) for tree in self.trees])

    def parameters_document(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {"hyper": dict(self.hyper)}
        if self.kind in ("lm", "rg"):
            doc["coefficients"] = self.coefficients.tolist()
        elif self.kind == "knn":
            doc["train_x"] = self.train_x.tolist()
            doc["train_y"] = self.train_y.tolist()
        else:
            doc["trees"] = [tree.to_document() for tree in self.trees]
        return {"params": doc}

    @classmethod
    def from_parameters(cls, kind: str, parameters: Dict[str, Any], scalers: ScalerParams) -> "BaselineModel":
        doc = parameters["params"]
        model = cls(kind, scalers, hyper=dict(doc["hyper"]))
        if kind in ("lm", "rg"):
            model.coefficients = np.array(doc["coefficients"], dtype=float)
        elif kind == "knn":
            model.train_x = np.array(doc["train_x"], dtype=float)
            model.train_y = np.array(doc["train_y"], dtype=float)
        else:
            model.trees = [FlatTree.from_document(t) for t in doc["trees"]]
        return model


# Fit -------------------------------------------------------------------------
def fit_linear(data: Dataset, scalers: Optional[ScalerParams] = None) -> BaselineModel:
    """Ordinary least squares per output

    Args:
        data:       Scaled training rows.
        scalers:    Scalers `data` was transformed with, stored in the model.

    Raises:
        RankDeficient: Inputs are linearly dependent.
    """
    return BaselineModel("lm", scalers, coefficients=fit_ols(data.inputs, data.outputs))


def fit_ridge(data: Dataset, alpha: float = 1.0, scalers: Optional[ScalerParams] = None) -> BaselineModel:
    """Ridge regression per output, intercept unpenalised"""
    coefficients = fit_ridge_coefficients(data.inputs, data.outputs, alpha)
    return BaselineModel("rg", scalers, coefficients=coefficients, hyper={"alpha": alpha})


def fit_knn(data: Dataset, k: int = 5, scalers: Optional[ScalerParams] = None) -> BaselineModel:
    """Mean of the k nearest scaled training inputs"""
    if not 1 <= k <= len(data):
        raise ValueError(f"k must be between 1 and {len(data)}")
    return BaselineModel(
        "knn",
        scalers,
        train_x=np.array(data.inputs),
        train_y=np.array(data.outputs),
        hyper={"k": k},
    )


def fit_tree(
    data: Dataset,
    max_depth: Optional[int] = None,
    min_leaf: int = 1,
    scalers: Optional[ScalerParams] = None,
) -> BaselineModel:
    """One CART regression tree per output"""
    trees = [
        grow_tree(data.inputs, data.outputs[:, j], max_depth=max_depth, min_leaf=min_leaf)
        for j in range(data.outputs.shape[1])
    ]
    return BaselineModel("dt", scalers, trees=trees, hyper={"max_depth": max_depth, "min_leaf": min_leaf})
