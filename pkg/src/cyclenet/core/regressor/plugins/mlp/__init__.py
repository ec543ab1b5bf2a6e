from .model import FreezeMask, MlpModel, MlpSpec, forward, frozen_layers_equal, gradients, init_model
from .training import TRANSFER_MASK, Adam, TrainConfig, train, transfer_train

__all__ = [
    "Adam",
    "FreezeMask",
    "MlpModel",
    "MlpSpec",
    "TRANSFER_MASK",
    "TrainConfig",
    "forward",
    "frozen_layers_equal",
    "gradients",
    "init_model",
    "train",
    "transfer_train",
]
