import numpy as np
import pytest

from dirp.agent.schedule import PhaseSchedule
from dirp.env.network import KpiReport, SliceSpec, Topology, TrafficMask
from dirp.env.scenario import small_scenario
from dirp.env.simulator import NetworkEnv
from dirp.misc.logops import configure_logging
from dirp.td3.hyper import Td3Hyper


@pytest.fixture(autouse=True)
def quiet_logging():
    # rebind to the stream captured for this test
    configure_logging("error")


@pytest.fixture
def small():
    return small_scenario()


@pytest.fixture
def small_env(small):
    topology, slices, mask = small
    return NetworkEnv(topology, slices, mask, seed=0)


@pytest.fixture
def tiny_hyper():
    return Td3Hyper(batch_size=4, actor_hidden=(8,), critic_hidden=(8,))


@pytest.fixture
def tiny_schedule():
    return PhaseSchedule(exploration=5, training=20, evaluation=5)


def one_slice(thr_req=4e6, delay_req=1e-3, rate=None, packet=1200.0, name="s"):
    return SliceSpec(
        name=name,
        thr_req=thr_req,
        delay_req=delay_req,
        per_ue_offered_rate=thr_req if rate is None else rate,
        max_users_per_group=10,
        packet_size=packet,
    )


def single_cell(nominal_users, noise=1e-3):
    users = np.atleast_2d(nominal_users)
    return Topology(
        num_cells=1,
        num_slices=users.shape[1],
        neighbor_sets=[set()],
        gain=np.ones((1, 1)),
        nominal_users=users,
        noise=noise,
    )


def constant_mask(num_slices, value=1.0, period=4):
    return TrafficMask(np.full((num_slices, period), value))


def make_kpi(throughput, delay, load=None, users=None, demand=None, t=0):
    throughput = np.atleast_2d(np.asarray(throughput, dtype=np.float64))
    delay = np.atleast_2d(np.asarray(delay, dtype=np.float64))
    shape = throughput.shape
    return KpiReport(
        t=t,
        throughput=throughput,
        delay=delay,
        load=np.zeros(shape) if load is None else np.atleast_2d(load).astype(np.float64),
        active_users=np.ones(shape, dtype=np.int64) if users is None else np.atleast_2d(users),
        demand=np.ones(shape) if demand is None else np.atleast_2d(demand).astype(np.float64),
        spectral_efficiency=np.ones(shape[0]),
    )
