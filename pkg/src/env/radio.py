"""
Load-coupled surrogate of a multi-cell radio network.

A cell's spectral efficiency depends on the interference it receives, which scales with how busy its
neighbors are (their summed slice loads). Slice loads in turn depend on the spectral efficiency, so loads
and efficiencies are solved jointly as a fixed point, starting from an idle network. Starting from zero load
the iterates increase monotonically towards the least fixed point and never leave [0, a].
"""

from typing import Optional, Sequence

import numpy as np
import structlog

from .network import KpiReport, SliceSpec, Topology

LOG = structlog.get_logger(__name__)

FIXED_POINT_TOL = 1e-6
FIXED_POINT_MAX_ITER = 100
RATE_EPS = 1e-9
UTIL_EPS = 1e-3


def spectral_efficiency(topology: Topology, activity: np.ndarray) -> np.ndarray:
    """Shannon efficiency of every cell given the activity (summed load) of all cells."""
    G = topology.gain
    P = topology.tx_power
    cross = G * activity[None, :]
    interference = P * (cross.sum(axis=1) - np.diag(cross))
    sinr = P * np.diag(G) / (interference + topology.noise)
    return np.log2(1.0 + sinr)


def solve_loads(
    topology: Topology,
    actions: np.ndarray,
    demand: np.ndarray,
    activity_override: Optional[np.ndarray] = None,
    tol: float = FIXED_POINT_TOL,
    max_iter: int = FIXED_POINT_MAX_ITER,
):
    """Iterate loads and efficiencies to their fixed point.

    ``activity_override`` freezes the activity of selected cells (non-NaN entries) at the given values, which
    lets callers study one cell while the rest of the network is held fixed.

    Returns (load, spectral_efficiency, iterations, converged).
    """
    load = np.zeros_like(demand)
    frozen = None
    if activity_override is not None:
        frozen = ~np.isnan(activity_override)

    converged = False
    iterations = 0
    se = None
    for iterations in range(1, max_iter + 1):
        activity = load.sum(axis=1)
        if frozen is not None:
            activity = np.where(frozen, activity_override, activity)
        se = spectral_efficiency(topology, activity)
        capacity = topology.bandwidth * se
        new_load = np.minimum(actions, demand / capacity[:, None])
        delta = np.max(np.abs(new_load - load))
        load = new_load
        if delta < tol:
            converged = True
            break

    if not converged:
        LOG.warning("load fixed point did not converge", iterations=iterations, tol=tol)

    return load, se, iterations, converged


def evaluate_partition(
    topology: Topology,
    slices: Sequence[SliceSpec],
    users: np.ndarray,
    actions: np.ndarray,
    t: int = 0,
    activity_override: Optional[np.ndarray] = None,
) -> KpiReport:
    """KPIs of all cells and slices when ``actions[k]`` partitions cell k among its slices."""
    lam = np.array([s.per_ue_offered_rate for s in slices])
    thr_req = np.array([s.thr_req for s in slices])
    delay_req = np.array([s.delay_req for s in slices])
    packet = np.array([s.packet_size for s in slices])

    users = np.asarray(users, dtype=np.int64)
    actions = np.asarray(actions, dtype=np.float64)
    demand = users * lam[None, :]

    load, se, iterations, converged = solve_loads(topology, actions, demand, activity_override)

    slice_capacity = actions * (topology.bandwidth * se)[:, None]
    served = np.minimum(demand, slice_capacity)
    throughput = served / np.maximum(users, 1)

    utilization = demand / np.maximum(slice_capacity, RATE_EPS)
    service_time = packet[None, :] / np.maximum(throughput, RATE_EPS)
    delay = service_time / np.maximum(1.0 - np.minimum(utilization, 1.0 - UTIL_EPS), UTIL_EPS)

    # Empty slices are reported as exactly satisfied.
    idle = users == 0
    throughput = np.where(idle, thr_req[None, :], throughput)
    delay = np.where(idle, delay_req[None, :], delay)
    load = np.where(idle, 0.0, load)

    return KpiReport(
        t=t,
        throughput=throughput,
        delay=delay,
        load=load,
        active_users=users,
        demand=demand,
        spectral_efficiency=se,
        iterations=iterations,
        converged=converged,
    )
