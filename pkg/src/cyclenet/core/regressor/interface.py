from abc import ABC, abstractmethod
from typing import Any, Dict

import numpy as np

from cyclenet.core.dataset import ScalerParams


class IRegressor(ABC):
    """Regressor interface

    A regressor maps the ten engine inputs to the five engine outputs. It
    owns the scalers fitted on its training data, so `predict` takes and
    returns values on the original scale.
    """

    kind: str
    scalers: ScalerParams

    # Predict -----------------------------------------------------------------
    @abstractmethod
    def predict_scaled(self, inputs: np.ndarray) -> np.ndarray:
        """Predict scaled outputs from scaled inputs

        Args:
            inputs: (n, 10) matrix already passed through the input scaler.

        Returns:
            (n, 5) matrix on the output scaler's scale.
        """
        raise NotImplementedError

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        """Predict outputs on the original scale

        Args:
            inputs: (n, 10) matrix of raw inputs.
        """
        scaled = self.scalers.inputs.transform(np.atleast_2d(inputs))
        return self.scalers.outputs.inverse_transform(self.predict_scaled(scaled))

    # Persistence -------------------------------------------------------------
    @abstractmethod
    def parameters_document(self) -> Dict[str, Any]:
        """JSON-ready fitted parameters, without the scalers"""
        raise NotImplementedError

    @classmethod
    @abstractmethod
    def from_parameters(
        cls, kind: str, parameters: Dict[str, Any], scalers: ScalerParams
    ) -> "IRegressor":
        """Rebuild a regressor from `parameters_document` output

        Args:
            kind:       Kind tag stored in the model file.
            parameters: Document returned by `parameters_document`.
            scalers:    Scalers stored next to the parameters.
        """
        raise NotImplementedError
