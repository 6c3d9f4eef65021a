from typing import Optional, Tuple

import numpy as np
import structlog
from tqdm import tqdm

from ..agent.dirp import LearningAgent
from ..agent.metrics import MetricsLog
from ..agent.replay import Transition
from ..agent.schedule import PhaseSchedule
from ..env.simulator import NetworkEnv
from ..harness.heuristic import bl_heur_actions
from ..mdp.observation import ObservationBuilder
from ..mdp.reward import RewardKind, combine_rewards, reward_from_satisfaction, satisfaction
from ..misc.errors import ConfigurationError, ContractError
from ..td3.hyper import Td3Hyper

LOG = structlog.get_logger(__name__)

GENERALIST_SEED_KEY = 7919


def generalist_seed(seed: int) -> int:
    return int(np.random.SeedSequence([seed, GENERALIST_SEED_KEY]).generate_state(1)[0])


def train_generalist(
    env: NetworkEnv,
    schedule: PhaseSchedule,
    reward_kind: RewardKind = RewardKind.MAX_MIN,
    hyper: Optional[Td3Hyper] = None,
    seed: int = 0,
    buffer_capacity: int = 20000,
    progress: bool = False,
) -> Tuple[LearningAgent, MetricsLog]:
    """Train one shared policy that acts for every cell.

    Each timestamp the agent picks a partition for every cell from that cell's own observation and the K
    resulting transitions go to its single buffer, which is sized ``buffer_capacity`` per cell. One
    gradient step is taken per timestamp.
    """
    reward_kind = RewardKind(reward_kind)
    builder = ObservationBuilder(env.topology, env.slices, coordination=True)
    K = env.num_cells
    dims = {builder.dim(k) for k in range(K)}
    if len(dims) != 1:
        raise ConfigurationError(f"Cells observe states of different sizes {sorted(dims)}, a shared policy needs one.")
    if env.t != schedule.start:
        raise ContractError(f"Environment at t={env.t}, generalist schedule starts at {schedule.start}.")

    agent = LearningAgent(
        dims.pop(),
        env.num_slices,
        hyper,
        seed=generalist_seed(seed),
        buffer_capacity=buffer_capacity * K,
    )
    agent.reset_epsilon(schedule.epsilon0)

    log = MetricsLog("generalist", seed)
    kpi = env.observe()
    obs = builder.all_local(kpi)
    for _ in tqdm(range(schedule.horizon), desc="generalist", disable=not progress, leave=False):
        t = env.t
        phase = schedule.phase(t)
        hints = bl_heur_actions(kpi)
        actions = np.stack([agent.choose(obs[k], t, schedule, hints[k]) for k in range(K)])
        agent.decay_epsilon(t, schedule)

        next_kpi = env.step(actions)
        thr_sat, delay_sat = satisfaction(next_kpi, env.slices)
        local = reward_from_satisfaction(thr_sat, delay_sat, reward_kind)
        next_obs = builder.all_local(next_kpi)

        for k in range(K):
            agent.observe_and_store(Transition(obs[k], actions[k], next_obs[k], float(local[k]), t, k))
        agent.maybe_train(t, schedule)

        log.record(
            t,
            phase.value,
            actions,
            next_kpi.load,
            thr_sat,
            delay_sat,
            local,
            combine_rewards(local, reward_kind),
            next_kpi.demand,
            env.traffic(t),
        )
        kpi, obs = next_kpi, next_obs

    LOG.info(
        "generalist trained",
        steps=len(log),
        instances=len(agent.buffer),
        train_steps=agent.td3.train_steps,
        epsilon=agent.epsilon,
    )
    return agent, log
