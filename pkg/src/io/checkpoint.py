"""
Checkpoints are JSON documents: an architecture descriptor plus nested arrays for every layer, optionally
with the Adam moments. Floats are written in shortest round-trip form, so save/load is exact.
"""

from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..approx.activations import Activation
from ..approx.adam import AdamState
from ..approx.mlp import Layer, ParamSet
from ..misc.errors import CheckpointError, ConfigurationError, DirpError

LOG = structlog.get_logger(__name__)

CHECKPOINT_VERSION = 1


class LayerDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    in_dim: int = Field(gt=0)
    out_dim: int = Field(gt=0)
    activation: Activation
    groups: int = Field(default=1, gt=0)
    weight: List[List[float]]
    bias: List[float]

    @model_validator(mode="after")
    def _shapes(self) -> "LayerDocument":
        if len(self.weight) != self.out_dim or any(len(row) != self.in_dim for row in self.weight):
            raise ValueError(f"weight is not {self.out_dim}x{self.in_dim}")
        if len(self.bias) != self.out_dim:
            raise ValueError(f"bias has {len(self.bias)} entries, expected {self.out_dim}")
        return self


class AdamDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lr: float = Field(gt=0)
    t: int = Field(ge=0)
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: List[List[float]]
    v: List[List[float]]


class NetworkDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format: Literal["dirp-mlp"] = "dirp-mlp"
    version: int = CHECKPOINT_VERSION
    layers: List[LayerDocument]
    adam: Optional[AdamDocument] = None


class CheckpointDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    version: int = CHECKPOINT_VERSION
    networks: Dict[str, NetworkDocument]
    hyper: Dict[str, Union[float, int, str, bool, List[int]]] = Field(default_factory=dict)
    metadata: Dict[str, Union[float, int, str, bool, List[int]]] = Field(default_factory=dict)


def network_to_document(net: ParamSet, adam: Optional[AdamState] = None) -> NetworkDocument:
    layers = [
        LayerDocument(
            in_dim=lay.in_dim,
            out_dim=lay.out_dim,
            activation=lay.activation,
            groups=lay.groups,
            weight=lay.weight.tolist(),
            bias=lay.bias.tolist(),
        )
        for lay in net.layers
    ]
    adam_doc = None
    if adam is not None:
        adam_doc = AdamDocument(
            lr=adam.lr,
            t=adam.t,
            beta1=adam.beta1,
            beta2=adam.beta2,
            eps=adam.eps,
            m=[m.ravel().tolist() for m in adam.m],
            v=[v.ravel().tolist() for v in adam.v],
        )
    return NetworkDocument(layers=layers, adam=adam_doc)


def network_from_document(doc: NetworkDocument) -> Tuple[ParamSet, Optional[AdamState]]:
    if doc.version > CHECKPOINT_VERSION:
        raise CheckpointError(f"Checkpoint version {doc.version} is newer than supported ({CHECKPOINT_VERSION}).")
    try:
        net = ParamSet([Layer(np.array(ld.weight), np.array(ld.bias), ld.activation, ld.groups) for ld in doc.layers])
    except ConfigurationError as e:
        raise CheckpointError(f"Invalid network in checkpoint: {e}") from e

    adam = None
    if doc.adam is not None:
        adam = AdamState.for_network(net, doc.adam.lr)
        if len(doc.adam.m) != len(adam.m) or len(doc.adam.v) != len(adam.v):
            raise CheckpointError("Optimizer moments do not match the network.")
        for i, shape in enumerate(m.shape for m in adam.m):
            m = np.array(doc.adam.m[i])
            v = np.array(doc.adam.v[i])
            if m.size != int(np.prod(shape)) or v.size != int(np.prod(shape)):
                raise CheckpointError(f"Optimizer moment {i} has the wrong size.")
            adam.m[i] = m.reshape(shape)
            adam.v[i] = v.reshape(shape)
        adam.t = doc.adam.t
        adam.beta1, adam.beta2, adam.eps = doc.adam.beta1, doc.adam.beta2, doc.adam.eps
    return net, adam


def dumps_paramset(net: ParamSet, adam: Optional[AdamState] = None) -> bytes:
    return network_to_document(net, adam).model_dump_json().encode()


def loads_paramset(data: Union[bytes, str]) -> Tuple[ParamSet, Optional[AdamState]]:
    try:
        doc = NetworkDocument.model_validate_json(data)
    except ValidationError as e:
        raise CheckpointError(f"Malformed network document: {e}") from e
    return network_from_document(doc)


def save_checkpoint(
    path: Union[str, Path],
    networks: Dict[str, ParamSet],
    optimizers: Optional[Dict[str, AdamState]] = None,
    hyper: Optional[dict] = None,
    metadata: Optional[dict] = None,
) -> Path:
    optimizers = optimizers or {}
    doc = CheckpointDocument(
        networks={name: network_to_document(net, optimizers.get(name)) for name, net in networks.items()},
        hyper=hyper or {},
        metadata=metadata or {},
    )
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(doc.model_dump_json(indent=1))
    except OSError as e:
        raise DirpError(f"Could not write checkpoint {path}: {e}") from e
    LOG.info("checkpoint written", path=str(path), networks=list(networks))
    return path


def load_checkpoint(path: Union[str, Path]) -> CheckpointDocument:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise DirpError(f"Could not read checkpoint {path}: {e}") from e
    try:
        return CheckpointDocument.model_validate_json(text)
    except ValidationError as e:
        raise CheckpointError(f"{path}: malformed checkpoint: {e}") from e


def load_networks(path: Union[str, Path]) -> Dict[str, Tuple[ParamSet, Optional[AdamState]]]:
    doc = load_checkpoint(path)
    return {name: network_from_document(nd) for name, nd in doc.networks.items()}


def describe_checkpoint(path: Union[str, Path]) -> str:
    """Human readable summary of a checkpoint file."""
    doc = load_checkpoint(path)
    lines = [f"{path} (version {doc.version})"]
    for name, nd in doc.networks.items():
        net, adam = network_from_document(nd)
        arch = " -> ".join([str(net.in_dim)] + [f"{lay.out_dim}:{lay.activation.value}" for lay in net.layers])
        params = net.flat().size
        opt = f", adam step {adam.t}" if adam is not None else ""
        lines.append(f"  {name}: {arch} ({params} parameters{opt}) sha256={net.checksum()[:12]}")
    for key, value in doc.hyper.items():
        lines.append(f"  hyper.{key} = {value}")
    for key, value in doc.metadata.items():
        lines.append(f"  meta.{key} = {value}")
    return "\n".join(lines)
