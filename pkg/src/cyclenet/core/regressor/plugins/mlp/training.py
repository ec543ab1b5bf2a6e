import logging
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from cyclenet.core.dataset import Dataset
from cyclenet.core.errors import FreezeError, NonFiniteLoss

from .core import Layer
from .model import FreezeMask, MlpModel, frozen_layers_equal, gradients

logger = logging.getLogger(__name__)

TRANSFER_MASK = FreezeMask.hidden(0, 1, 2)


@dataclass(frozen=True)
class TrainConfig:
    """Mini-batch Adam on the mean squared error

    Attributes:
        epochs:         Passes over the data, 0 leaves the model untouched.
        batch_size:     Rows per step, the last short batch is kept.
        learning_rate:  Adam step size.
        beta1:          First moment decay.
        beta2:          Second moment decay.
        epsilon:        Denominator floor.
        shuffle_seed:   PCG64 seed of the per-epoch row order.
        freeze:         Layers held fixed.
    """

    epochs: int = 50
    batch_size: int = 16
    learning_rate: float = 1.0e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1.0e-8
    shuffle_seed: int = 0
    freeze: FreezeMask = field(default_factory=FreezeMask)

    def __post_init__(self) -> None:
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")


class Adam:
    def __init__(self, layers: List[Layer], config: TrainConfig):
        """Adam optimizer state for a list of (weights, bias) pairs"""
        self.config = config
        self.step_count = 0
        self.m = [(np.zeros_like(w), np.zeros_like(b)) for w, b in layers]
        self.v = [(np.zeros_like(w), np.zeros_like(b)) for w, b in layers]

    def step(self, layers: List[Layer], grads: List[Layer], trainable: List[bool]) -> None:
        """Update the trainable layers in place"""
        c = self.config
        self.step_count += 1
        correction1 = 1.0 - c.beta1**self.step_count
        correction2 = 1.0 - c.beta2**self.step_count
        for i, flag in enumerate(trainable):
            if not flag:
                continue
            for j in range(2):
                param, grad = layers[i][j], grads[i][j]
                m, v = self.m[i][j], self.v[i][j]
                m *= c.beta1
                m += (1.0 - c.beta1) * grad
                v *= c.beta2
                v += (1.0 - c.beta2) * grad * grad
                param -= c.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + c.epsilon)


def train(
    model: MlpModel,
    train_data: Dataset,
    config: TrainConfig = TrainConfig(),
    on_epoch: Optional[Callable[[int, float], None]] = None,
) -> Tuple[MlpModel, List[float]]:
    """Fit a network on scaled data

    The input model is not modified.

    Args:
        model:      Starting weights.
        train_data: Rows already scaled with the model's scalers.
        config:     Optimizer settings and freeze mask.
        on_epoch:   Called as `on_epoch(epoch, loss)` after every epoch.

    Returns:
        Trained copy of the model and the mean training loss of every epoch.

    Raises:
        NonFiniteLoss:  The loss diverged.
        FreezeError:    The mask leaves nothing to train.
    """
    trained = model.copy()
    if config.epochs == 0:
        return trained, []

    trainable = config.freeze.trainable(model.spec.n_layers)
    x, y = train_data.inputs, train_data.outputs
    n = len(train_data)
    if n == 0:
        raise ValueError("no training rows")

    rng = np.random.Generator(np.random.PCG64(config.shuffle_seed))
    adam = Adam(trained.layers, config)
    history = []

    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            rows = order[start : start + config.batch_size]
            loss, grads = gradients(trained, x[rows], y[rows], config.freeze)
            if not np.isfinite(loss):
                raise NonFiniteLoss(epoch)
            adam.step(trained.layers, grads, trainable)
            total += loss * rows.size

        epoch_loss = total / n
        if not np.isfinite(epoch_loss):
            raise NonFiniteLoss(epoch)
        history.append(epoch_loss)
        logger.info("epoch %d/%d loss %.6g", epoch + 1, config.epochs, epoch_loss)
        if callable(on_epoch):
            on_epoch(epoch, epoch_loss)

    for w, b in trained.layers:
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise NonFiniteLoss(config.epochs - 1)
    return trained, history


def transfer_train(
    model: MlpModel,
    new_data: Dataset,
    config: TrainConfig = TrainConfig(),
    freeze: FreezeMask = TRANSFER_MASK,
    on_epoch: Optional[Callable[[int, float], None]] = None,
) -> Tuple[MlpModel, List[float]]:
    """Retrain a trained network on a shifted regime with its input side frozen

    Args:
        model:      Previously trained network.
        new_data:   Rows scaled with the ORIGINAL scalers of `model`.
        config:     Optimizer settings, its freeze mask is replaced by `freeze`.
        freeze:     Layers held fixed, the three first hidden layers by default.

    Raises:
        FreezeError:    The mask freezes every layer, or a frozen layer moved.
    """
    config = replace(config, freeze=freeze)
    trained, history = train(model, new_data, config, on_epoch=on_epoch)
    if not frozen_layers_equal(model, trained, freeze):
        raise FreezeError("a frozen layer changed during transfer training")
    return trained, history
