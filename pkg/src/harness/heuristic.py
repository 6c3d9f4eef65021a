import numpy as np

from ..env.network import KpiReport


def bl_heur_action(kpi: KpiReport, cell: int) -> np.ndarray:
    """Traffic-aware partition: resources proportional to each slice's offered demand, equal split if idle."""
    demand = np.asarray(kpi.demand[cell], dtype=np.float64)
    total = demand.sum()
    if total <= 0:
        return np.full(demand.shape[0], 1.0 / demand.shape[0])
    return demand / total


def bl_heur_actions(kpi: KpiReport) -> np.ndarray:
    return np.stack([bl_heur_action(kpi, k) for k in range(kpi.num_cells)])
