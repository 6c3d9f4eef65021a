from enum import Enum

import numpy as np

from ..misc.errors import ContractError


class Activation(str, Enum):
    RELU = "relu"
    LINEAR = "linear"
    DECOUPLED_SOFTMAX = "decoupled_softmax"


def decoupled_softmax(logits: np.ndarray, groups: int = 1) -> np.ndarray:
    """Softmax over each of ``groups`` consecutive blocks of the last axis."""
    z = np.asarray(logits, dtype=np.float64)
    if z.shape[-1] % groups != 0:
        raise ContractError(f"{z.shape[-1]} logits cannot be split into {groups} groups.")
    g = z.reshape(*z.shape[:-1], groups, z.shape[-1] // groups)
    e = np.exp(g - g.max(axis=-1, keepdims=True))
    return (e / e.sum(axis=-1, keepdims=True)).reshape(z.shape)


def decoupled_softmax_backward(y: np.ndarray, dy: np.ndarray, groups: int = 1) -> np.ndarray:
    """Vector-Jacobian product of the grouped softmax, given its output ``y``."""
    shape = y.shape
    yg = y.reshape(*shape[:-1], groups, shape[-1] // groups)
    dg = dy.reshape(yg.shape)
    dz = yg * (dg - (dg * yg).sum(axis=-1, keepdims=True))
    return dz.reshape(shape)


def softmax_jacobian(y: np.ndarray) -> np.ndarray:
    """Full Jacobian dy/dz of a single softmax group."""
    y = np.asarray(y, dtype=np.float64)
    return np.diag(y) - np.outer(y, y)


def apply(activation: Activation, z: np.ndarray, groups: int = 1) -> np.ndarray:
    if activation == Activation.RELU:
        return np.maximum(z, 0.0)
    if activation == Activation.LINEAR:
        return z
    return decoupled_softmax(z, groups)


def backward(activation: Activation, z: np.ndarray, y: np.ndarray, dy: np.ndarray, groups: int = 1) -> np.ndarray:
    if activation == Activation.RELU:
        return dy * (z > 0)
    if activation == Activation.LINEAR:
        return dy
    return decoupled_softmax_backward(y, dy, groups)
