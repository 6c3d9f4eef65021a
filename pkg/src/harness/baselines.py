from typing import Optional

import structlog
from tqdm import tqdm

from ..agent.dirp import LearningAgent, make_agents, run_dirp
from ..agent.metrics import MetricsLog
from ..agent.replay import Transition
from ..agent.schedule import PhaseSchedule
from ..env.simulator import NetworkEnv
from ..mdp.observation import ObservationBuilder
from ..mdp.reward import RewardKind, combine_rewards, reward_from_satisfaction, satisfaction
from ..mdp.state import state_dim
from ..misc.errors import ConfigurationError
from ..td3.hyper import Td3Hyper
from .heuristic import bl_heur_actions

LOG = structlog.get_logger(__name__)

CENTRALIZED_EXPLORATION = 500


def _record(log: MetricsLog, env: NetworkEnv, t: int, phase: str, actions, kpi, reward_kind: RewardKind):
    thr_sat, delay_sat = satisfaction(kpi, env.slices)
    local = reward_from_satisfaction(thr_sat, delay_sat, reward_kind)
    glob = combine_rewards(local, reward_kind)
    log.record(t, phase, actions, kpi.load, thr_sat, delay_sat, local, glob, kpi.demand, env.traffic(t))
    return local, glob


def run_bl_heur(
    env: NetworkEnv,
    schedule: PhaseSchedule,
    reward_kind: RewardKind = RewardKind.MAX_MIN,
    seed: int = 0,
    progress: bool = False,
    log: Optional[MetricsLog] = None,
) -> MetricsLog:
    """Every cell partitions proportionally to its last observed per-slice demand. Nothing is learned."""
    reward_kind = RewardKind(reward_kind)
    log = log if log is not None else MetricsLog("bl-heur", seed)
    kpi = env.observe()
    for _ in tqdm(range(schedule.horizon), desc="bl-heur", disable=not progress, leave=False):
        t = env.t
        actions = bl_heur_actions(kpi)
        kpi = env.step(actions)
        _record(log, env, t, schedule.phase(t).value, actions, kpi, reward_kind)
    return log


def run_bl_dist(
    env: NetworkEnv,
    schedule: PhaseSchedule,
    reward_kind: RewardKind = RewardKind.MAX_MIN,
    hyper: Optional[Td3Hyper] = None,
    seed: int = 0,
    buffer_capacity: int = 20000,
    progress: bool = False,
) -> MetricsLog:
    """Independent per-cell learners without the neighbor message."""
    builder = ObservationBuilder(env.topology, env.slices, coordination=False)
    agents = make_agents(builder, hyper, seed=seed, buffer_capacity=buffer_capacity)
    return run_dirp(
        env,
        agents,
        schedule,
        reward_kind,
        coordination=False,
        scheme="bl-dist",
        seed=seed,
        progress=progress,
    )


def centralized_agent(
    env: NetworkEnv,
    hyper: Optional[Td3Hyper] = None,
    seed: int = 0,
    buffer_capacity: int = 20000,
) -> LearningAgent:
    K, N = env.num_cells, env.num_slices
    hyper = hyper if hyper is not None else Td3Hyper.centralized()
    return LearningAgent(K * state_dim(N), K * N, hyper, groups=K, seed=seed, buffer_capacity=buffer_capacity)


def run_centralized(
    env: NetworkEnv,
    agent: LearningAgent,
    schedule: PhaseSchedule,
    reward_kind: RewardKind = RewardKind.MAX_MIN,
    seed: int = 0,
    progress: bool = False,
    log: Optional[MetricsLog] = None,
) -> MetricsLog:
    """A single agent observing the global state, choosing every cell's partition and learning the global reward."""
    reward_kind = RewardKind(reward_kind)
    K, N = env.num_cells, env.num_slices
    if agent.state_dim != K * state_dim(N) or agent.action_dim != K * N or agent.groups != K:
        raise ConfigurationError(f"Centralized agent does not match {K} cells with {N} slices.")
    builder = ObservationBuilder(env.topology, env.slices, coordination=False)
    agent.reset_epsilon(schedule.epsilon0)

    log = log if log is not None else MetricsLog("bl-cen", seed)
    kpi = env.observe()
    x = builder.global_state(kpi)
    for _ in tqdm(range(schedule.horizon), desc="bl-cen", disable=not progress, leave=False):
        t = env.t
        hint = bl_heur_actions(kpi).reshape(-1)
        flat = agent.select_action(x, t, schedule, hint)
        actions = flat.reshape(K, N)

        kpi = env.step(actions)
        _, glob = _record(log, env, t, schedule.phase(t).value, actions, kpi, reward_kind)
        next_x = builder.global_state(kpi)
        agent.observe_and_store(Transition(x, flat, next_x, glob, t))
        agent.maybe_train(t, schedule)
        x = next_x

    LOG.info("run finished", scheme="bl-cen", seed=seed, steps=len(log), train_steps=agent.td3.train_steps)
    return log


def run_bl_cen(
    env: NetworkEnv,
    schedule: PhaseSchedule,
    reward_kind: RewardKind = RewardKind.MAX_MIN,
    hyper: Optional[Td3Hyper] = None,
    seed: int = 0,
    buffer_capacity: int = 20000,
    progress: bool = False,
) -> MetricsLog:
    agent = centralized_agent(env, hyper, seed=seed, buffer_capacity=buffer_capacity)
    return run_centralized(env, agent, schedule, reward_kind, seed=seed, progress=progress)
