from enum import Enum
from typing import Sequence, Tuple

import numpy as np

from ..env.network import KpiReport, SliceSpec
from ..misc.errors import ContractError

DELAY_FLOOR = 1e-6


class RewardKind(str, Enum):
    MAX_MIN = "maxmin"
    LOG_UTILITY = "log"


def satisfaction(kpi: KpiReport, slices: Sequence[SliceSpec]) -> Tuple[np.ndarray, np.ndarray]:
    """Uncapped throughput (phi / phi*) and delay (d* / d) satisfaction, both shaped [cell, slice]."""
    if not (np.all(np.isfinite(kpi.throughput)) and np.all(np.isfinite(kpi.delay))):
        raise ContractError(f"Nonfinite KPIs at t={kpi.t}.")
    thr_req = np.array([s.thr_req for s in slices])
    delay_req = np.array([s.delay_req for s in slices])
    thr_sat = kpi.throughput / thr_req[None, :]
    delay_sat = delay_req[None, :] / np.maximum(kpi.delay, DELAY_FLOOR)
    return thr_sat, delay_sat


def reward_from_satisfaction(thr_sat: np.ndarray, delay_sat: np.ndarray, kind: RewardKind) -> np.ndarray:
    """Reward along the last (slice) axis."""
    level = np.minimum(thr_sat, delay_sat)
    if kind == RewardKind.MAX_MIN:
        return np.minimum(level, 1.0).min(axis=-1)
    if kind == RewardKind.LOG_UTILITY:
        return np.log2(level + 1.0).mean(axis=-1)
    raise ContractError(f"Unknown reward kind {kind}.")


def local_rewards(kpi: KpiReport, slices: Sequence[SliceSpec], kind: RewardKind) -> np.ndarray:
    thr_sat, delay_sat = satisfaction(kpi, slices)
    return reward_from_satisfaction(thr_sat, delay_sat, RewardKind(kind))


def local_reward(kpi: KpiReport, cell: int, slices: Sequence[SliceSpec], kind: RewardKind) -> float:
    return float(local_rewards(kpi, slices, kind)[cell])


def combine_rewards(local: np.ndarray, kind: RewardKind) -> float:
    """Network reward from per-cell rewards: worst cell for max-min, average cell for log utility."""
    if RewardKind(kind) == RewardKind.MAX_MIN:
        return float(np.min(local))
    return float(np.mean(local))


def global_reward(kpi: KpiReport, slices: Sequence[SliceSpec], kind: RewardKind) -> float:
    return combine_rewards(local_rewards(kpi, slices, kind), kind)
