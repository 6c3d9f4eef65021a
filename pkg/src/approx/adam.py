from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from ..misc.errors import ContractError
from .mlp import Gradient, ParamSet


@dataclass
class AdamState:
    """First and second moments of one network's parameters."""

    lr: float
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_network(cls, net: ParamSet, lr: float) -> "AdamState":
        shapes = []
        for lay in net.layers:
            shapes += [lay.weight.shape, lay.bias.shape]
        return cls(lr=lr, m=[np.zeros(s) for s in shapes], v=[np.zeros(s) for s in shapes])

    def matches(self, net: ParamSet) -> bool:
        shapes = []
        for lay in net.layers:
            shapes += [lay.weight.shape, lay.bias.shape]
        return [m.shape for m in self.m] == shapes and [v.shape for v in self.v] == shapes


def adam_step(net: ParamSet, grad: Gradient, state: AdamState) -> Tuple[ParamSet, AdamState]:
    """One bias-corrected Adam descent step, applied in place."""
    if not state.matches(net) or len(grad.weights) != len(net.layers):
        raise ContractError("Gradient or optimizer state does not match the network.")
    if not grad.is_finite():
        raise ContractError("Refusing an Adam step with a nonfinite gradient.")

    state.t += 1
    c1 = 1.0 - state.beta1**state.t
    c2 = 1.0 - state.beta2**state.t

    params = []
    grads = []
    for lay, gw, gb in zip(net.layers, grad.weights, grad.biases):
        params += [lay.weight, lay.bias]
        grads += [gw, gb]

    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g
        m_hat = state.m[i] / c1
        v_hat = state.v[i] / c2
        p -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)

    return net, state
