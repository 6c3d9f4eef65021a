"""
Scenario files are JSON documents with ``topology``, ``slices`` and ``mask`` sections. The topology is
either explicit (neighbor sets, gains, nominal users) or a ``grid``; the mask is inline values, a headerless CSV
file with one row per slice and one column per timestamp, or ``synthetic``.
"""

from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd
import structlog
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..env.network import SliceSpec, Topology, TrafficMask, check_dimensions
from ..env.scenario import default_scenario, grid_topology, small_scenario, synthetic_mask
from ..misc.errors import ConfigurationError, DirpError

LOG = structlog.get_logger(__name__)

BUILTIN_SCENARIOS = {"default": default_scenario, "small": small_scenario}

Scenario = Tuple[Topology, List[SliceSpec], TrafficMask]


class GridDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    rows: int = Field(gt=0)
    cols: int = Field(gt=0)
    cross_gain: float = Field(default=0.08, gt=0, le=1)
    path_loss_exponent: float = Field(default=3.0, ge=0)
    neighbor_radius: float = Field(default=1.5, gt=0)
    weak_cells: List[int] = Field(default_factory=list)
    weak_serving_gain: float = Field(default=0.4, gt=0, le=1)
    weak_cross_factor: float = Field(default=2.0, gt=0)


class TopologyDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    nominal_users: List[List[int]]
    grid: Optional[GridDocument] = None
    neighbor_sets: Optional[List[List[int]]] = None
    gain: Optional[List[List[float]]] = None
    bandwidth: float = Field(default=20e6, gt=0)
    tx_power: float = Field(default=1.0, gt=0)
    noise: float = Field(default=1e-3, gt=0)

    @model_validator(mode="after")
    def _one_layout(self) -> "TopologyDocument":
        explicit = self.neighbor_sets is not None and self.gain is not None
        if (self.grid is not None) != explicit:
            return self
        raise ValueError("give either 'grid' or both 'neighbor_sets' and 'gain'")


class SyntheticMaskDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    days: int = Field(default=21, gt=0)
    steps_per_day: int = Field(default=96, gt=0)
    peak_hours: Optional[List[float]] = None
    weekend_factor: Optional[List[float]] = None
    noise_std: float = Field(default=0.03, ge=0)


class MaskDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    values: Optional[List[List[float]]] = None
    csv: Optional[str] = None
    synthetic: Optional[SyntheticMaskDocument] = None
    period: Optional[int] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _one_source(self) -> "MaskDocument":
        if sum(x is not None for x in (self.values, self.csv, self.synthetic)) != 1:
            raise ValueError("give exactly one of 'values', 'csv' or 'synthetic'")
        return self


class ScenarioDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    topology: TopologyDocument
    slices: List[SliceSpec]
    mask: MaskDocument


def _topology(doc: TopologyDocument) -> Topology:
    users = np.array(doc.nominal_users)
    if users.ndim != 2:
        raise ConfigurationError("nominal_users must be a cells x slices table.")
    if doc.grid is not None:
        g = doc.grid
        if g.rows * g.cols != users.shape[0]:
            raise ConfigurationError(f"A {g.rows}x{g.cols} grid needs {g.rows * g.cols} rows of nominal users.")
        return grid_topology(
            g.rows,
            g.cols,
            users,
            cross_gain=g.cross_gain,
            path_loss_exponent=g.path_loss_exponent,
            neighbor_radius=g.neighbor_radius,
            weak_cells=g.weak_cells,
            weak_serving_gain=g.weak_serving_gain,
            weak_cross_factor=g.weak_cross_factor,
            bandwidth=doc.bandwidth,
            tx_power=doc.tx_power,
            noise=doc.noise,
        )
    return Topology(
        num_cells=users.shape[0],
        num_slices=users.shape[1],
        neighbor_sets=[set(s) for s in doc.neighbor_sets],
        gain=np.array(doc.gain),
        nominal_users=users,
        bandwidth=doc.bandwidth,
        tx_power=doc.tx_power,
        noise=doc.noise,
    )


def _mask(doc: MaskDocument, num_slices: int, base: Path, seed: int) -> TrafficMask:
    if doc.values is not None:
        return TrafficMask(np.array(doc.values), doc.period)
    if doc.synthetic is not None:
        s = doc.synthetic
        return synthetic_mask(
            num_slices,
            days=s.days,
            steps_per_day=s.steps_per_day,
            peak_hours=s.peak_hours,
            weekend_factor=s.weekend_factor,
            noise_std=s.noise_std,
            seed=seed,
        )
    path = base / doc.csv
    try:
        frame = pd.read_csv(path, header=None)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ConfigurationError(f"Could not read traffic mask {path}: {e}") from e
    return TrafficMask(frame.to_numpy(dtype=np.float64), doc.period)


def parse_scenario(
    text: Union[str, bytes],
    base: Path = Path("."),
    seed: int = 0,
    source: str = "<scenario>",
) -> Scenario:
    try:
        doc = ScenarioDocument.model_validate_json(text)
    except ValidationError as e:
        raise ConfigurationError(f"{source}: invalid scenario: {e}") from e
    topology = _topology(doc.topology)
    slices = list(doc.slices)
    mask = _mask(doc.mask, topology.num_slices, base, seed)
    check_dimensions(topology, slices, mask)
    return topology, slices, mask


def load_scenario(ref: Union[str, Path], seed: int = 0) -> Scenario:
    """Built-in scenario by name (``default``, ``small``) or a scenario file."""
    if isinstance(ref, str) and ref in BUILTIN_SCENARIOS:
        return BUILTIN_SCENARIOS[ref](seed)
    path = Path(ref)
    try:
        text = path.read_text()
    except OSError as e:
        raise DirpError(f"Could not read scenario {path}: {e}") from e
    scenario = parse_scenario(text, base=path.parent, seed=seed, source=str(path))
    LOG.debug("scenario loaded", path=str(path), cells=scenario[0].num_cells, slices=scenario[0].num_slices)
    return scenario
