from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from cyclenet.core.dataset import INPUT_COLUMNS, OUTPUT_COLUMNS, ScalerParams
from cyclenet.core.errors import FreezeError
from cyclenet.core.regressor.interface import IRegressor

from .core import Layer, backward_pass, forward_pass, he_layers, mse

DEFAULT_LAYER_SIZES = (len(INPUT_COLUMNS),) + (16,) * 6 + (len(OUTPUT_COLUMNS),)


@dataclass(frozen=True)
class MlpSpec:
    """Dense network shape

    Attributes:
        layer_sizes:        Input width, hidden widths, output width.
        hidden_activation:  Only 'relu' is supported.
        output_activation:  Only 'identity' is supported.
    """

    layer_sizes: Tuple[int, ...] = DEFAULT_LAYER_SIZES
    hidden_activation: str = "relu"
    output_activation: str = "identity"

    def __post_init__(self) -> None:
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValueError("need at least an input and an output layer of positive width")
        if self.hidden_activation != "relu" or self.output_activation != "identity":
            raise ValueError("only relu hidden layers and an identity output are supported")
        object.__setattr__(self, "layer_sizes", sizes)

    @property
    def n_layers(self) -> int:
        """Number of dense layers, hidden plus output"""
        return len(self.layer_sizes) - 1

    def to_document(self) -> Dict[str, Any]:
        return {
            "layer_sizes": list(self.layer_sizes),
            "hidden_activation": self.hidden_activation,
            "output_activation": self.output_activation,
        }

    @classmethod
    def from_document(cls, doc: Dict[str, Any]) -> "MlpSpec":
        return cls(tuple(doc["layer_sizes"]), doc["hidden_activation"], doc["output_activation"])


@dataclass(frozen=True)
class FreezeMask:
    """Which dense layers are held fixed during training

    Layer i is the dense layer producing hidden layer i, the last index is
    the output layer. An empty mask trains everything.
    """

    frozen: Tuple[int, ...] = ()

    @classmethod
    def hidden(cls, *indices: int) -> "FreezeMask":
        """ex: FreezeMask.hidden(0, 1, 2) freezes the three layers closest to the inputs"""
        return cls(tuple(sorted(set(indices))))

    @classmethod
    def none(cls) -> "FreezeMask":
        return cls(())

    def trainable(self, n_layers: int) -> List[bool]:
        """
        Raises:
            FreezeError: The mask freezes every layer or names a layer that does not exist.
        """
        if any(i < 0 or i >= n_layers for i in self.frozen):
            raise FreezeError(f"freeze mask {self.frozen} outside of the {n_layers} layers")
        flags = [i not in self.frozen for i in range(n_layers)]
        if not any(flags):
            raise FreezeError("every layer is frozen, nothing left to train")
        return flags


@dataclass(eq=False)
class MlpModel(IRegressor):
    """Weights of a dense rectifier network and the scalers it was trained with"""

    spec: MlpSpec
    layers: List[Layer]
    scalers: Optional[ScalerParams] = None
    kind: str = field(default="dnn", init=False)

    def __post_init__(self) -> None:
        sizes = self.spec.layer_sizes
        if len(self.layers) != self.spec.n_layers:
            raise ValueError(f"{len(self.layers)} layers for a spec with {self.spec.n_layers}")
        for i, (w, b) in enumerate(self.layers):
            if w.shape != (sizes[i], sizes[i + 1]) or b.shape != (sizes[i + 1],):
                raise ValueError(f"layer {i} has shape {w.shape}, expected {(sizes[i], sizes[i + 1])}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {i} holds non-finite weights")

    def copy(self) -> "MlpModel":
        return MlpModel(self.spec, [(w.copy(), b.copy()) for w, b in self.layers], self.scalers)

    def predict_scaled(self, inputs: np.ndarray) -> np.ndarray:
        return forward(self, inputs)

    def parameters_document(self) -> Dict[str, Any]:
        return {
            "spec": self.spec.to_document(),
            "layers": [{"weights": w.tolist(), "bias": b.tolist()} for w, b in self.layers],
        }

    @classmethod
    def from_parameters(cls, kind: str, parameters: Dict[str, Any], scalers: ScalerParams) -> "MlpModel":
        spec = MlpSpec.from_document(parameters["spec"])
        layers = [
            (np.array(layer["weights"], dtype=float).reshape(spec.layer_sizes[i], spec.layer_sizes[i + 1]),
             np.array(layer["bias"], dtype=float))
            for i, layer in enumerate(parameters["layers"])
        ]
        return cls(spec, layers, scalers)


def init_model(spec: MlpSpec = MlpSpec(), seed: int = 0, scalers: Optional[ScalerParams] = None) -> MlpModel:
    """He-initialised network, the same seed gives the same weights"""
    rng = np.random.Generator(np.random.PCG64(seed))
    return MlpModel(spec, he_layers(spec.layer_sizes, rng), scalers)


def forward(model: MlpModel, inputs: np.ndarray) -> np.ndarray:
    """Scaled outputs for scaled inputs, one row per configuration"""
    output, _ = forward_pass(model.layers, np.atleast_2d(np.asarray(inputs, dtype=float)))
    return output


def gradients(
    model: MlpModel,
    inputs: np.ndarray,
    targets: np.ndarray,
    freeze: FreezeMask = FreezeMask(),
) -> Tuple[float, List[Layer]]:
    """Mean squared error of a batch and its gradient for every layer

    Args:
        model:      Network.
        inputs:     (n, d_in) scaled inputs.
        targets:    (n, d_out) scaled targets.
        freeze:     Layers reported with zero gradient.

    Returns:
        Loss and one (d weights, d bias) pair per layer.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.atleast_2d(np.asarray(targets, dtype=float))
    prediction, activations = forward_pass(model.layers, x)
    grads = backward_pass(
        model.layers, activations, prediction, y, freeze.trainable(model.spec.n_layers)
    )
    return mse(prediction, y), grads


def frozen_layers_equal(before: MlpModel, after: MlpModel, freeze: FreezeMask) -> bool:
    """Bit-for-bit comparison of the layers a mask holds fixed"""
    return all(
        np.array_equal(before.layers[i][0], after.layers[i][0])
        and np.array_equal(before.layers[i][1], after.layers[i][1])
        for i in freeze.frozen
    )
