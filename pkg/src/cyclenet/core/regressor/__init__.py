from .interface import IRegressor
from .io import MODEL_FORMAT, MODEL_VERSION, load_model, load_model_with_meta, save_model

__all__ = [
    "IRegressor",
    "MODEL_FORMAT",
    "MODEL_VERSION",
    "load_model",
    "load_model_with_meta",
    "save_model",
]
