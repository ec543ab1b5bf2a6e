"""
Model files

A model file is one JSON document:

    {
        "format": "cyclenet-model",
        "version": 1,
        "kind": "dnn" | "lm" | "rg" | "knn" | "dt",
        "spec": ..., "layers": ...      (dnn)
        "params": ...                   (baselines)
        "scalers": {"inputs": ..., "outputs": ..., "fitted_on": n},
        "meta": {...}
    }

JSON floats are written with the shortest repr that reads back to the same
double, so loading a saved model gives bit-identical predictions.
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional, Type

from cyclenet.core.dataset import ScalerParams
from cyclenet.core.errors import ParseError, VersionMismatch

from .interface import IRegressor
from .plugins.baselines import KINDS as BASELINE_KINDS
from .plugins.baselines import BaselineModel
from .plugins.mlp import MlpModel

MODEL_FORMAT = "cyclenet-model"
MODEL_VERSION = 1


def _model_class(kind: str) -> Type[IRegressor]:
    if kind == "dnn":
        return MlpModel
    if kind in BASELINE_KINDS:
        return BaselineModel
    raise ParseError(f"unknown model kind '{kind}'")


def model_document(model: IRegressor, meta: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    if model.scalers is None:
        raise ValueError("a model needs its scalers to be saved")
    doc: Dict[str, Any] = {"format": MODEL_FORMAT, "version": MODEL_VERSION, "kind": model.kind}
    doc.update(model.parameters_document())
    doc["scalers"] = model.scalers.to_document()
    doc["meta"] = dict(meta or {})
    return doc


def save_model(model: IRegressor, path: Path, meta: Optional[Dict[str, Any]] = None) -> None:
    """Write a model with its scalers

    Args:
        model:  Fitted regressor, its scalers must be set.
        path:   Output JSON file.
        meta:   Free-form entries, ex: loss history, training seconds.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        json.dump(model_document(model, meta), f)


def load_model(path: Path) -> IRegressor:
    """
    Raises:
        OSError:            The file cannot be read.
        ParseError:         Not JSON, truncated or missing entries.
        VersionMismatch:    Unsupported format version.
    """
    model, _ = load_model_with_meta(path)
    return model


def load_model_with_meta(path: Path):
    path = Path(path)
    with path.open() as f:
        text = f.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: {e.msg}", line=e.lineno, column=e.colno)

    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ParseError(f"{path} is not a cyclenet model file")
    if doc.get("version") != MODEL_VERSION:
        raise VersionMismatch(doc.get("version"), MODEL_VERSION)

    try:
        kind = doc["kind"]
        scalers = ScalerParams.from_document(doc["scalers"])
        model = _model_class(kind).from_parameters(kind, doc, scalers)
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"{path}: incomplete model document ({e})")
    return model, doc.get("meta", {})
