from typing import List, Literal, Optional, Sequence, Union

import numpy as np
import structlog

from ..misc.errors import ConfigurationError, ContractError
from ..misc.simplexops import check_simplex, renormalize, round_half_up, uniform_partition
from .network import KpiReport, SliceSpec, Topology, TrafficMask, check_dimensions
from .radio import evaluate_partition

LOG = structlog.get_logger(__name__)

UserModel = Literal["mask", "binomial"]


class NetworkEnv:
    """Seedable multi-cell multi-slice network driven by a traffic mask.

    One instance is owned by one thread. ``step`` evaluates the partition for the current timestamp and
    advances the clock; ``observe`` evaluates without advancing.
    """

    def __init__(
        self,
        topology: Topology,
        slices: Sequence[SliceSpec],
        mask: TrafficMask,
        seed: int = 0,
        user_model: UserModel = "mask",
    ):
        check_dimensions(topology, slices, mask)
        if user_model not in ("mask", "binomial"):
            raise ConfigurationError(f"Unknown user model '{user_model}'.")

        self.topology = topology
        self.slices = list(slices)
        self.mask = mask
        self.user_model = user_model
        self.seed = seed

        self.t = 0
        self.rng = np.random.default_rng(seed)
        self.users = self._draw_users(0)

    @property
    def num_cells(self) -> int:
        return self.topology.num_cells

    @property
    def num_slices(self) -> int:
        return self.topology.num_slices

    @property
    def thr_req(self) -> np.ndarray:
        return np.array([s.thr_req for s in self.slices])

    @property
    def delay_req(self) -> np.ndarray:
        return np.array([s.delay_req for s in self.slices])

    def _draw_users(self, t: int) -> np.ndarray:
        tau = self.mask.at(t)
        U = self.topology.nominal_users
        if self.user_model == "binomial":
            return self.rng.binomial(U, np.broadcast_to(tau[None, :], U.shape)).astype(np.int64)
        return round_half_up(tau[None, :] * U)

    def _as_matrix(self, actions: Union[np.ndarray, List[np.ndarray]]) -> np.ndarray:
        a = np.asarray(actions, dtype=np.float64)
        if a.shape != (self.num_cells, self.num_slices):
            raise ContractError(f"Expected actions of shape {(self.num_cells, self.num_slices)}, got {a.shape}.")
        for k in range(self.num_cells):
            check_simplex(a[k])
        # tolerated round-off is removed before the radio model sees the partition
        return renormalize(np.clip(a, 0.0, None))

    def traffic(self, t: Optional[int] = None) -> np.ndarray:
        return self.mask.at(self.t if t is None else t)

    def observe(self, actions: Optional[Union[np.ndarray, List[np.ndarray]]] = None) -> KpiReport:
        """KPIs at the current timestamp under ``actions`` (equal split if omitted), without advancing."""
        if actions is None:
            actions = np.tile(uniform_partition(self.num_slices), (self.num_cells, 1))
        a = self._as_matrix(actions)
        return evaluate_partition(self.topology, self.slices, self.users, a, t=self.t)

    def step(self, actions: Union[np.ndarray, List[np.ndarray]]) -> KpiReport:
        report = self.observe(actions)
        self.t += 1
        self.users = self._draw_users(self.t)
        return report


def reset(
    topology: Topology,
    slices: Sequence[SliceSpec],
    mask: TrafficMask,
    seed: int = 0,
    user_model: UserModel = "mask",
) -> NetworkEnv:
    env = NetworkEnv(topology, slices, mask, seed=seed, user_model=user_model)
    LOG.debug("environment reset", cells=env.num_cells, slices=env.num_slices, seed=seed)
    return env


def step(env: NetworkEnv, actions: Union[np.ndarray, List[np.ndarray]]) -> KpiReport:
    return env.step(actions)
