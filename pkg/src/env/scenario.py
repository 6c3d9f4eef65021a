from dataclasses import dataclass
from typing import List, Optional, Sequence, Set, Tuple

import numpy as np

from ..misc.errors import ConfigurationError
from .network import SliceSpec, Topology, TrafficMask

STEPS_PER_DAY = 96
MASK_DAYS = 21
GROUPS_PER_SLICE = 4
MAX_GROUP_SIZE = 10


@dataclass(frozen=True)
class UserGroup:
    """Users of one slice wandering over a few neighboring cells."""

    slice_index: int
    size: int
    cells: Tuple[int, ...]


def default_slices() -> List[SliceSpec]:
    # Offered rate per user equals the throughput requirement; packet sizes set how much headroom the
    # delay requirement needs on top of it.
    return [
        SliceSpec(
            name="slice-1",
            thr_req=4e6,
            delay_req=1e-3,
            per_ue_offered_rate=4e6,
            max_users_per_group=10,
            packet_size=1200.0,
        ),
        SliceSpec(
            name="slice-2",
            thr_req=1e6,
            delay_req=1.5e-3,
            per_ue_offered_rate=1e6,
            max_users_per_group=10,
            packet_size=900.0,
        ),
        SliceSpec(
            name="slice-3",
            thr_req=3e6,
            delay_req=2e-3,
            per_ue_offered_rate=3e6,
            max_users_per_group=10,
            packet_size=1200.0,
        ),
        SliceSpec(
            name="slice-4",
            thr_req=0.5e6,
            delay_req=1e-3,
            per_ue_offered_rate=0.5e6,
            max_users_per_group=10,
            packet_size=250.0,
        ),
    ]


def grid_topology(
    rows: int,
    cols: int,
    nominal_users: np.ndarray,
    cross_gain: float = 0.08,
    path_loss_exponent: float = 3.0,
    neighbor_radius: float = 1.5,
    weak_cells: Sequence[int] = (),
    weak_serving_gain: float = 0.4,
    weak_cross_factor: float = 2.0,
    bandwidth: float = 20e6,
    tx_power: float = 1.0,
    noise: float = 1e-3,
) -> Topology:
    """Cells on a rows x cols grid with unit spacing.

    Cross gains decay as ``cross_gain * distance**-path_loss_exponent``. Cells within ``neighbor_radius``
    are neighbors. ``weak_cells`` get a lower serving gain and stronger incoming interference, which gives
    them a visibly different channel quality distribution.
    """
    K = rows * cols
    pos = np.array([(r, c) for r in range(rows) for c in range(cols)], dtype=np.float64)
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)

    gain = np.ones((K, K))
    off = ~np.eye(K, dtype=bool)
    gain[off] = cross_gain * dist[off] ** (-path_loss_exponent)

    for k in weak_cells:
        if not 0 <= k < K:
            raise ConfigurationError(f"Weak cell {k} outside of a {rows}x{cols} grid.")
        gain[k, off[k]] = gain[k, off[k]] * weak_cross_factor
        gain[k, k] = weak_serving_gain
        gain[k] = np.minimum(gain[k], weak_serving_gain)

    neighbor_sets: List[Set[int]] = [
        set(np.flatnonzero((dist[k] <= neighbor_radius) & off[k]).tolist()) for k in range(K)
    ]

    nominal_users = np.asarray(nominal_users)
    return Topology(
        num_cells=K,
        num_slices=nominal_users.shape[1],
        neighbor_sets=neighbor_sets,
        gain=gain,
        nominal_users=nominal_users,
        bandwidth=bandwidth,
        tx_power=tx_power,
        noise=noise,
    )


def synthetic_mask(
    num_slices: int,
    days: int = MASK_DAYS,
    steps_per_day: int = STEPS_PER_DAY,
    peak_hours: Optional[Sequence[float]] = None,
    weekend_factor: Optional[Sequence[float]] = None,
    noise_std: float = 0.03,
    seed: int = 0,
) -> TrafficMask:
    """Daily traffic profiles with one peak per slice, damped on weekends, plus a little seeded noise."""
    if peak_hours is None:
        peak_hours = [20.0, 11.0, 15.0, 13.0, 9.0, 18.0][:num_slices]
    if weekend_factor is None:
        weekend_factor = [1.0, 0.7, 0.85, 0.95, 0.8, 0.9][:num_slices]
    if len(peak_hours) != num_slices or len(weekend_factor) != num_slices:
        raise ConfigurationError("Need one peak hour and one weekend factor per slice.")

    rng = np.random.default_rng(seed)
    period = days * steps_per_day
    t = np.arange(period)
    hour = (t % steps_per_day) * 24.0 / steps_per_day
    weekend = ((t // steps_per_day) % 7) >= 5

    values = np.empty((num_slices, period))
    for n in range(num_slices):
        phase = 2 * np.pi * (hour - peak_hours[n]) / 24.0
        profile = 0.2 + 0.8 * ((1 + np.cos(phase)) / 2) ** 2
        profile = np.where(weekend, profile * weekend_factor[n], profile)
        values[n] = profile + rng.normal(0.0, noise_std, size=period)

    return TrafficMask(values=np.clip(values, 0.0, 1.0), period=period)


def user_groups(
    rows: int,
    cols: int,
    num_slices: int,
    groups_per_slice: int = GROUPS_PER_SLICE,
    max_size: int = MAX_GROUP_SIZE,
    seed: int = 0,
) -> List[UserGroup]:
    """``groups_per_slice`` groups per slice, each covering a contiguous run of cells in a seeded ring order.

    The runs of one slice partition the grid, so every cell serves every slice. Sizes are drawn from
    ``[max_size - 3, max_size]``.
    """
    K = rows * cols
    if groups_per_slice > K:
        raise ConfigurationError(f"{groups_per_slice} groups per slice cannot cover distinct cells of {K}.")
    rng = np.random.default_rng(seed)
    # snake order keeps consecutive cells adjacent on the grid
    order = [r * cols + (c if r % 2 == 0 else cols - 1 - c) for r in range(rows) for c in range(cols)]
    groups = []
    for n in range(num_slices):
        ring = np.roll(order, -int(rng.integers(K)))
        for cells in np.array_split(ring, groups_per_slice):
            size = int(rng.integers(max(max_size - 3, 1), max_size + 1))
            groups.append(UserGroup(slice_index=n, size=size, cells=tuple(int(k) for k in cells)))
    return groups


def nominal_users_from_groups(groups: Sequence[UserGroup], num_cells: int, num_slices: int) -> np.ndarray:
    """Nominal users per cell and slice: each group splits evenly over its cells, remainder to the first."""
    users = np.zeros((num_cells, num_slices), dtype=np.int64)
    for g in groups:
        share, extra = divmod(g.size, len(g.cells))
        for i, k in enumerate(g.cells):
            users[k, g.slice_index] += share + (1 if i < extra else 0)
    return users


def default_scenario(seed: int = 0) -> Tuple[Topology, List[SliceSpec], TrafficMask]:
    """Twelve cells on a 3x4 grid serving four slices over a three-week traffic mask.

    16 user groups (four per slice, at most 10 users each) are spread over the cells, so every cell serves
    users of every slice. Cells 1 and 5 (0-based) have degraded geometry.
    """
    slices = default_slices()
    groups = user_groups(3, 4, len(slices), seed=seed + 2016)
    nominal_users = nominal_users_from_groups(groups, 12, len(slices))
    topology = grid_topology(3, 4, nominal_users, weak_cells=(1, 5))
    mask = synthetic_mask(len(slices), seed=seed)
    return topology, slices, mask


def small_scenario(seed: int = 0) -> Tuple[Topology, List[SliceSpec], TrafficMask]:
    """Three mutually neighboring cells with the first two default slices, loaded close to capacity at peak."""
    slices = default_slices()[:2]
    nominal_users = np.array([[7, 8], [6, 9], [8, 7]])
    topology = grid_topology(1, 3, nominal_users, cross_gain=0.08, path_loss_exponent=0.0, neighbor_radius=2.0)
    mask = synthetic_mask(len(slices), seed=seed)
    return topology, slices, mask
