from dataclasses import dataclass
from typing import List, Optional, Sequence, Set

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..misc.errors import ConfigurationError


class SliceSpec(BaseModel):
    """Requirements and offered traffic of one network slice."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = ""
    thr_req: float = Field(gt=0, description="Required per-user throughput [bit/s].")
    delay_req: float = Field(gt=0, description="Required delay [s].")
    per_ue_offered_rate: float = Field(gt=0, description="Offered rate per active user [bit/s].")
    max_users_per_group: int = Field(gt=0)
    packet_size: float = Field(gt=0, description="Packet size [bit].")


@dataclass
class Topology:
    """Cells, their neighbor relations and the mean channel gains between them.

    ``gain[k, j]`` is the gain from cell j's transmitter to the users of cell k, ``nominal_users[k, n]`` the
    number of users of slice n assigned to cell k when the traffic mask is at 1.
    """

    num_cells: int
    num_slices: int
    neighbor_sets: List[Set[int]]
    gain: np.ndarray
    nominal_users: np.ndarray
    bandwidth: float = 20e6
    tx_power: float = 1.0
    noise: float = 1e-3

    def __post_init__(self):
        self.gain = np.asarray(self.gain, dtype=np.float64)
        self.nominal_users = np.asarray(self.nominal_users, dtype=np.int64)
        self.neighbor_sets = [set(int(j) for j in s) for s in self.neighbor_sets]
        self.validate()

    def validate(self) -> None:
        K, N = self.num_cells, self.num_slices
        if K < 1 or N < 1:
            raise ConfigurationError(f"Need at least one cell and one slice, got K={K}, N={N}.")
        if self.gain.shape != (K, K):
            raise ConfigurationError(f"Gain matrix has shape {self.gain.shape}, expected {(K, K)}.")
        if self.nominal_users.shape != (K, N):
            raise ConfigurationError(f"Nominal users have shape {self.nominal_users.shape}, expected {(K, N)}.")
        if np.any(self.nominal_users < 0):
            raise ConfigurationError("Nominal users must be nonnegative.")
        if len(self.neighbor_sets) != K:
            raise ConfigurationError(f"Got {len(self.neighbor_sets)} neighbor sets for {K} cells.")
        if not np.all(self.gain > 0) or not np.all(self.gain <= 1):
            raise ConfigurationError("All gains must lie in (0, 1].")
        diag = np.diag(self.gain)
        if np.any(self.gain > diag[:, None] + 1e-15):
            raise ConfigurationError("Serving gain G[k][k] must dominate every cross gain G[k][j].")
        for k, nbrs in enumerate(self.neighbor_sets):
            if k in nbrs:
                raise ConfigurationError(f"Cell {k} lists itself as a neighbor.")
            for j in nbrs:
                if not 0 <= j < K:
                    raise ConfigurationError(f"Cell {k} has unknown neighbor {j}.")
                if k not in self.neighbor_sets[j]:
                    raise ConfigurationError(f"Neighbor relation {k} -> {j} is not symmetric.")
        if self.bandwidth <= 0 or self.tx_power <= 0 or self.noise <= 0:
            raise ConfigurationError("Bandwidth, transmit power and noise must be positive.")


@dataclass
class TrafficMask:
    """Per-slice traffic scaling tau[n][t] in [0, 1], repeated every ``period`` timestamps."""

    values: np.ndarray
    period: Optional[int] = None

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=np.float64))
        if self.period is None:
            self.period = self.values.shape[1]
        if self.values.shape[1] != self.period:
            raise ConfigurationError(f"Mask has {self.values.shape[1]} columns but period {self.period}.")
        if self.period < 1:
            raise ConfigurationError("Mask period must be positive.")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0) or np.any(self.values > 1):
            raise ConfigurationError("Traffic mask values must lie in [0, 1].")

    @property
    def num_slices(self) -> int:
        return self.values.shape[0]

    def at(self, t: int) -> np.ndarray:
        return self.values[:, t % self.period]


@dataclass
class KpiReport:
    """KPIs of all cells and slices for one timestamp. Arrays are indexed [cell, slice]."""

    t: int
    throughput: np.ndarray
    delay: np.ndarray
    load: np.ndarray
    active_users: np.ndarray
    demand: np.ndarray
    spectral_efficiency: np.ndarray
    iterations: int = 0
    converged: bool = True

    @property
    def num_cells(self) -> int:
        return self.load.shape[0]

    @property
    def num_slices(self) -> int:
        return self.load.shape[1]


def check_dimensions(topology: Topology, slices: Sequence[SliceSpec], mask: TrafficMask) -> None:
    N = topology.num_slices
    if len(slices) != N:
        raise ConfigurationError(f"Topology has {N} slices but {len(slices)} slice specs were given.")
    if mask.num_slices != N:
        raise ConfigurationError(f"Traffic mask has {mask.num_slices} rows, expected {N}.")
    caps = np.array([s.max_users_per_group for s in slices])
    if np.any(topology.nominal_users > caps[None, :]):
        raise ConfigurationError("Nominal users exceed the slice's maximum group size.")
