from typing import Optional, Sequence

import numpy as np

from ..env.network import KpiReport, SliceSpec

FEATURES_PER_SLICE = 5


class StateNormalizer:
    """Fixed scaling of the raw KPIs: throughput and throughput requirements by the largest requirement,
    delay requirements by the largest delay requirement, users by the largest group size."""

    def __init__(self, slices: Sequence[SliceSpec]):
        self.thr_req = np.array([s.thr_req for s in slices])
        self.delay_req = np.array([s.delay_req for s in slices])
        self.thr_scale = self.thr_req.max()
        self.delay_scale = self.delay_req.max()
        self.user_scale = float(max(s.max_users_per_group for s in slices))

    @property
    def num_slices(self) -> int:
        return len(self.thr_req)


def build_local_state(
    kpi: KpiReport,
    cell: int,
    slices: Sequence[SliceSpec],
    normalizer: Optional[StateNormalizer] = None,
) -> np.ndarray:
    """Local state of ``cell``: for each slice the block (throughput, load, users, thr_req, delay_req)."""
    norm = normalizer if normalizer is not None else StateNormalizer(slices)
    N = norm.num_slices
    state = np.empty((N, FEATURES_PER_SLICE))
    state[:, 0] = kpi.throughput[cell] / norm.thr_scale
    state[:, 1] = kpi.load[cell]
    state[:, 2] = kpi.active_users[cell] / norm.user_scale
    state[:, 3] = norm.thr_req / norm.thr_scale
    state[:, 4] = norm.delay_req / norm.delay_scale
    return state.reshape(-1)


def build_global_state(
    kpi: KpiReport,
    slices: Sequence[SliceSpec],
    normalizer: Optional[StateNormalizer] = None,
) -> np.ndarray:
    norm = normalizer if normalizer is not None else StateNormalizer(slices)
    return np.concatenate([build_local_state(kpi, k, slices, norm) for k in range(kpi.num_cells)])


def state_dim(num_slices: int) -> int:
    return FEATURES_PER_SLICE * num_slices
