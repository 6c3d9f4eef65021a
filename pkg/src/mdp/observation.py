from typing import List, Sequence

import numpy as np
import structlog

from ..env.network import KpiReport, SliceSpec, Topology
from .message import extract_message
from .state import StateNormalizer, build_global_state, build_local_state, state_dim

LOG = structlog.get_logger(__name__)


class ObservationBuilder:
    """Agent inputs: the local state, followed by the extracted neighbor message when coordinating.

    A cell without neighbors has nothing to coordinate with and observes its local state only.
    """

    def __init__(self, topology: Topology, slices: Sequence[SliceSpec], coordination: bool = True):
        self.topology = topology
        self.slices = list(slices)
        self.coordination = coordination
        self.normalizer = StateNormalizer(slices)
        self.uses_message: List[bool] = [coordination and len(nbrs) > 0 for nbrs in topology.neighbor_sets]
        if coordination:
            isolated = [k for k, nbrs in enumerate(topology.neighbor_sets) if not nbrs]
            if isolated:
                LOG.warning("cells without neighbors observe their local state only", cells=isolated)

    def dim(self, cell: int) -> int:
        N = self.topology.num_slices
        return state_dim(N) + (N if self.uses_message[cell] else 0)

    def local(self, kpi: KpiReport, cell: int) -> np.ndarray:
        s = build_local_state(kpi, cell, self.slices, self.normalizer)
        if not self.uses_message[cell]:
            return s
        c = extract_message(kpi, cell, self.topology.neighbor_sets[cell]).extracted
        return np.concatenate([s, c])

    def all_local(self, kpi: KpiReport) -> List[np.ndarray]:
        return [self.local(kpi, k) for k in range(self.topology.num_cells)]

    def global_state(self, kpi: KpiReport) -> np.ndarray:
        return build_global_state(kpi, self.slices, self.normalizer)
