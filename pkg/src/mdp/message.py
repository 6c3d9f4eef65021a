from dataclasses import dataclass
from typing import Iterable

import numpy as np
import structlog

from ..env.network import KpiReport

LOG = structlog.get_logger(__name__)


@dataclass
class NeighborMessage:
    """Loads reported by the neighbors (``raw``, one row per neighbor) and their per-slice mean (``extracted``)."""

    raw: np.ndarray
    extracted: np.ndarray
    degenerate: bool = False


def extract_message(kpi: KpiReport, cell: int, neighbors: Iterable[int]) -> NeighborMessage:
    nbrs = sorted(neighbors)
    if not nbrs:
        LOG.warning("cell has no neighbors, sending an empty message", cell=cell)
        return NeighborMessage(
            raw=np.zeros((0, kpi.num_slices)),
            extracted=np.zeros(kpi.num_slices),
            degenerate=True,
        )
    raw = kpi.load[nbrs]
    return NeighborMessage(raw=raw, extracted=raw.mean(axis=0))
