"""
Knowledge handed from the generalist to one cell's specialist, and its on-disk form: a directory holding
``models.json`` (a checkpoint), ``instances.csv`` (one transition per row) and ``package.json``.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd
import structlog
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..agent.dirp import LearningAgent
from ..agent.replay import ReplayBuffer, Transition
from ..approx.mlp import ParamSet
from ..io.checkpoint import load_networks, save_checkpoint
from ..misc.errors import CheckpointError, DirpError
from ..td3.agent import CURRENT_NETWORK_NAMES
from .scheme import TransferOptions

LOG = structlog.get_logger(__name__)

PACKAGE_VERSION = 1
MODELS_FILE = "models.json"
INSTANCES_FILE = "instances.csv"
METADATA_FILE = "package.json"


class PackageDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format: str = "dirp-package"
    version: int = PACKAGE_VERSION
    target_cell: int = Field(ge=0)
    generalist_steps: int = Field(ge=0)
    state_dim: int = Field(gt=0)
    action_dim: int = Field(gt=0)
    has_models: bool
    num_instances: int = Field(ge=0)
    label: str = ""


@dataclass
class KnowledgePackage:
    target_cell: int
    state_dim: int
    action_dim: int
    generalist_steps: int = 0
    models: Optional[Dict[str, ParamSet]] = None
    instances: List[Transition] = field(default_factory=list)
    label: str = ""

    @property
    def source_cells(self) -> List[int]:
        return [tr.cell for tr in self.instances]

    @property
    def empty(self) -> bool:
        return self.models is None and not self.instances

    def save(self, directory: Union[str, Path]) -> Path:
        directory = Path(directory)
        try:
            directory.mkdir(parents=True, exist_ok=True)
            if self.models is not None:
                save_checkpoint(directory / MODELS_FILE, self.models, metadata={"target_cell": self.target_cell})
            _instances_frame(self.instances, self.state_dim, self.action_dim).to_csv(
                directory / INSTANCES_FILE,
                index=False,
            )
            doc = PackageDocument(
                target_cell=self.target_cell,
                generalist_steps=self.generalist_steps,
                state_dim=self.state_dim,
                action_dim=self.action_dim,
                has_models=self.models is not None,
                num_instances=len(self.instances),
                label=self.label,
            )
            (directory / METADATA_FILE).write_text(doc.model_dump_json(indent=1))
        except OSError as e:
            raise DirpError(f"Could not write knowledge package {directory}: {e}") from e
        LOG.info("package written", path=str(directory), cell=self.target_cell, instances=len(self.instances))
        return directory

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "KnowledgePackage":
        directory = Path(directory)
        try:
            doc = PackageDocument.model_validate_json((directory / METADATA_FILE).read_text())
        except OSError as e:
            raise DirpError(f"Could not read knowledge package {directory}: {e}") from e
        except ValidationError as e:
            raise CheckpointError(f"{directory}: malformed package metadata: {e}") from e
        if doc.version > PACKAGE_VERSION:
            raise CheckpointError(f"Package version {doc.version} is newer than supported ({PACKAGE_VERSION}).")

        models = None
        if doc.has_models:
            models = {name: net for name, (net, _) in load_networks(directory / MODELS_FILE).items()}

        try:
            frame = pd.read_csv(directory / INSTANCES_FILE, float_precision="round_trip")
        except (OSError, pd.errors.EmptyDataError) as e:
            raise CheckpointError(f"Could not read instances of {directory}: {e}") from e
        instances = _instances_from_frame(frame, doc.state_dim, doc.action_dim)
        if len(instances) != doc.num_instances:
            raise CheckpointError(f"{directory}: expected {doc.num_instances} instances, found {len(instances)}.")

        return cls(
            target_cell=doc.target_cell,
            state_dim=doc.state_dim,
            action_dim=doc.action_dim,
            generalist_steps=doc.generalist_steps,
            models=models,
            instances=instances,
            label=doc.label,
        )


def _columns(state_dim: int, action_dim: int) -> List[str]:
    return (
        ["timestamp", "cell", "reward"]
        + [f"s{i}" for i in range(state_dim)]
        + [f"a{i}" for i in range(action_dim)]
        + [f"next_s{i}" for i in range(state_dim)]
    )


def _instances_frame(instances: List[Transition], state_dim: int, action_dim: int) -> pd.DataFrame:
    cols = _columns(state_dim, action_dim)
    if not instances:
        return pd.DataFrame(columns=cols)
    rows = np.array(
        [
            np.concatenate([[tr.timestamp, tr.cell, tr.reward], tr.state, tr.action, tr.next_state])
            for tr in instances
        ],
    )
    frame = pd.DataFrame(rows, columns=cols)
    return frame.astype({"timestamp": np.int64, "cell": np.int64})


def _instances_from_frame(frame: pd.DataFrame, state_dim: int, action_dim: int) -> List[Transition]:
    cols = _columns(state_dim, action_dim)
    if list(frame.columns) != cols:
        raise CheckpointError("Instance columns do not match the package dimensions.")
    S = [f"s{i}" for i in range(state_dim)]
    A = [f"a{i}" for i in range(action_dim)]
    NS = [f"next_s{i}" for i in range(state_dim)]
    states = frame[S].to_numpy(dtype=np.float64)
    actions = frame[A].to_numpy(dtype=np.float64)
    next_states = frame[NS].to_numpy(dtype=np.float64)
    return [
        Transition(states[i], actions[i], next_states[i], float(r), int(t), int(c))
        for i, (t, c, r) in enumerate(frame[["timestamp", "cell", "reward"]].itertuples(index=False))
    ]


def build_package(
    generalist: LearningAgent,
    buffer: Optional[ReplayBuffer],
    options: TransferOptions,
    target_cell: int,
    generalist_steps: int = 0,
    label: str = "",
) -> KnowledgePackage:
    """Select what ``target_cell``'s specialist receives: copies of the networks and/or the generalist's
    transitions that this very cell produced."""
    models = None
    if options.transfer_models:
        # targets are rebuilt from these on the specialist side
        nets = generalist.td3.networks()
        models = {name: nets[name].copy() for name in CURRENT_NETWORK_NAMES}
    instances: List[Transition] = []
    if options.transfer_instances and buffer is not None:
        instances = buffer.transitions(cell=target_cell)
    return KnowledgePackage(
        target_cell=target_cell,
        state_dim=generalist.state_dim,
        action_dim=generalist.action_dim,
        generalist_steps=generalist_steps,
        models=models,
        instances=instances,
        label=label,
    )
