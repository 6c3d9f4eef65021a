import hashlib
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from ..misc.errors import ConfigurationError, ContractError
from . import activations
from .activations import Activation


@dataclass
class Layer:
    """Fully connected layer ``y = act(W x + b)`` with W shaped (out, in)."""

    weight: np.ndarray
    bias: np.ndarray
    activation: Activation = Activation.RELU
    groups: int = 1

    def __post_init__(self):
        self.weight = np.array(self.weight, dtype=np.float64, ndmin=2)
        self.bias = np.array(self.bias, dtype=np.float64, ndmin=1)
        self.activation = Activation(self.activation)

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]


@dataclass
class Tape:
    """Activations recorded by a forward pass, consumed by the matching backward pass."""

    inputs: List[np.ndarray] = field(default_factory=list)
    pre: List[np.ndarray] = field(default_factory=list)
    post: List[np.ndarray] = field(default_factory=list)
    batched: bool = True


@dataclass
class Gradient:
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(w)) for w in self.weights) and all(np.all(np.isfinite(b)) for b in self.biases)

    def flat(self) -> np.ndarray:
        return np.concatenate([np.concatenate([w.ravel(), b.ravel()]) for w, b in zip(self.weights, self.biases)])


class ParamSet:
    """An MLP as an ordered list of layers. Inputs are vectors or batches of row vectors."""

    def __init__(self, layers: Sequence[Layer]):
        self.layers = list(layers)
        self.validate()

    @classmethod
    def initialize(
        cls,
        sizes: Sequence[int],
        rng: np.random.Generator,
        output_activation: Activation = Activation.LINEAR,
        groups: int = 1,
        hidden_activation: Activation = Activation.RELU,
    ) -> "ParamSet":
        """Layers of the given widths, weights and biases uniform in +-1/sqrt(fan_in)."""
        if len(sizes) < 2:
            raise ConfigurationError("An MLP needs at least an input and an output size.")
        layers = []
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            last = i == len(sizes) - 2
            bound = 1.0 / np.sqrt(fan_in)
            w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
            b = rng.uniform(-bound, bound, size=fan_out)
            act = output_activation if last else hidden_activation
            layers.append(Layer(w, b, act, groups if last else 1))
        return cls(layers)

    def validate(self) -> None:
        if not self.layers:
            raise ConfigurationError("A parameter set needs at least one layer.")
        for i, layer in enumerate(self.layers):
            if layer.bias.shape != (layer.out_dim,):
                raise ConfigurationError(f"Layer {i}: bias of shape {layer.bias.shape}, expected ({layer.out_dim},).")
            if i > 0 and layer.in_dim != self.layers[i - 1].out_dim:
                raise ConfigurationError(
                    f"Layer {i} expects {layer.in_dim} inputs but layer {i - 1} produces {self.layers[i - 1].out_dim}.",
                )
            if layer.activation == Activation.DECOUPLED_SOFTMAX:
                if i != len(self.layers) - 1:
                    raise ConfigurationError("Decoupled softmax is only allowed on the output layer.")
                if layer.out_dim % layer.groups != 0:
                    raise ConfigurationError(f"{layer.out_dim} outputs cannot be split into {layer.groups} groups.")
            if not (np.all(np.isfinite(layer.weight)) and np.all(np.isfinite(layer.bias))):
                raise ConfigurationError(f"Layer {i} holds nonfinite parameters.")

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def groups(self) -> int:
        return self.layers[-1].groups

    @property
    def architecture(self) -> List[Tuple[int, int, str, int]]:
        return [(lay.in_dim, lay.out_dim, lay.activation.value, lay.groups) for lay in self.layers]

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Tape]:
        x = np.asarray(x, dtype=np.float64)
        batched = x.ndim == 2
        h = x if batched else x[None, :]
        if h.shape[1] != self.in_dim:
            raise ContractError(f"Input of dimension {h.shape[1]} for a network expecting {self.in_dim}.")

        tape = Tape(batched=batched)
        for layer in self.layers:
            z = h @ layer.weight.T + layer.bias
            y = activations.apply(layer.activation, z, layer.groups)
            tape.inputs.append(h)
            tape.pre.append(z)
            tape.post.append(y)
            h = y

        return (h if batched else h[0]), tape

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, tape: Tape, output_grad: np.ndarray) -> Tuple[Gradient, np.ndarray]:
        """Reverse-mode pass. Gradients are summed over the batch; scale ``output_grad`` for means."""
        if len(tape.pre) != len(self.layers):
            raise ContractError("Tape was not produced by this network.")
        dy = np.asarray(output_grad, dtype=np.float64)
        dy = dy if tape.batched else dy[None, :]
        if dy.shape != tape.post[-1].shape:
            raise ContractError(f"Output gradient of shape {dy.shape}, expected {tape.post[-1].shape}.")

        dws: List[np.ndarray] = [None] * len(self.layers)
        dbs: List[np.ndarray] = [None] * len(self.layers)
        for i in reversed(range(len(self.layers))):
            layer = self.layers[i]
            dz = activations.backward(layer.activation, tape.pre[i], tape.post[i], dy, layer.groups)
            dws[i] = dz.T @ tape.inputs[i]
            dbs[i] = dz.sum(axis=0)
            dy = dz @ layer.weight

        return Gradient(dws, dbs), (dy if tape.batched else dy[0])

    def copy(self) -> "ParamSet":
        return ParamSet([Layer(lay.weight.copy(), lay.bias.copy(), lay.activation, lay.groups) for lay in self.layers])

    def same_architecture(self, other: "ParamSet") -> bool:
        return self.architecture == other.architecture

    def copy_from(self, other: "ParamSet") -> None:
        if not self.same_architecture(other):
            raise ConfigurationError(f"Cannot copy {other.architecture} into {self.architecture}.")
        for mine, theirs in zip(self.layers, other.layers):
            mine.weight[...] = theirs.weight
            mine.bias[...] = theirs.bias

    def soft_update_from(self, other: "ParamSet", tau: float) -> None:
        """self <- tau * other + (1 - tau) * self."""
        for mine, theirs in zip(self.layers, other.layers):
            mine.weight[...] = tau * theirs.weight + (1.0 - tau) * mine.weight
            mine.bias[...] = tau * theirs.bias + (1.0 - tau) * mine.bias

    def zero_gradient(self) -> Gradient:
        return Gradient(
            [np.zeros_like(lay.weight) for lay in self.layers],
            [np.zeros_like(lay.bias) for lay in self.layers],
        )

    def flat(self) -> np.ndarray:
        return np.concatenate([np.concatenate([lay.weight.ravel(), lay.bias.ravel()]) for lay in self.layers])

    def set_flat(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=np.float64)
        pos = 0
        for lay in self.layers:
            n = lay.weight.size
            lay.weight[...] = values[pos : pos + n].reshape(lay.weight.shape)
            pos += n
            lay.bias[...] = values[pos : pos + lay.bias.size]
            pos += lay.bias.size

    def checksum(self) -> str:
        h = hashlib.sha256()
        h.update(repr(self.architecture).encode())
        h.update(self.flat().tobytes())
        return h.hexdigest()


def forward(net: ParamSet, x: np.ndarray) -> Tuple[np.ndarray, Tape]:
    return net.forward(x)


def backward(net: ParamSet, tape: Tape, output_grad: np.ndarray) -> Tuple[Gradient, np.ndarray]:
    return net.backward(tape, output_grad)
