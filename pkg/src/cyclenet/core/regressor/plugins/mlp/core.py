"""
Dense rectifier network numerics

A network is a list of (weights, bias) pairs, weights shaped (fan_in, fan_out).
Every layer but the last is followed by a rectifier. Rows are samples.
"""

from typing import List, Sequence, Tuple

import numpy as np

Layer = Tuple[np.ndarray, np.ndarray]


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def he_layers(sizes: Sequence[int], rng: np.random.Generator) -> List[Layer]:
    """Fan-in scaled normal weights, zero biases"""
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in)
        layers.append((w, np.zeros(fan_out)))
    return layers


def forward_pass(layers: Sequence[Layer], x: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Network output and the input of every layer

    Returns:
        Output matrix and the list of layer inputs, `activations[0]` is `x`.
    """
    activations = [x]
    h = x
    last = len(layers) - 1
    for i, (w, b) in enumerate(layers):
        z = h @ w + b
        h = z if i == last else relu(z)
        if i != last:
            activations.append(h)
    return h, activations


def mse(prediction: np.ndarray, target: np.ndarray) -> float:
    """Mean squared error over rows and outputs"""
    return float(np.mean((prediction - target) ** 2))


def backward_pass(
    layers: Sequence[Layer],
    activations: Sequence[np.ndarray],
    prediction: np.ndarray,
    target: np.ndarray,
    trainable: Sequence[bool],
) -> List[Layer]:
    """Reverse-mode gradients of `mse` for every layer

    Frozen layers get zero gradients. The error still flows through them to
    any trainable layer below.
    """
    grad = 2.0 * (prediction - target) / prediction.size
    grads: List[Layer] = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        w, b = layers[i]
        a = activations[i]
        if trainable[i]:
            grads[i] = (a.T @ grad, grad.sum(axis=0))
        else:
            grads[i] = (np.zeros_like(w), np.zeros_like(b))
        if i > 0 and any(trainable[:i]):
            # Rectifier derivative, taken as 0 at 0
            grad = (grad @ w.T) * (a > 0.0)
    return grads
