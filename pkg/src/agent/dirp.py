from typing import Collection, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from tqdm import tqdm

from ..env.simulator import NetworkEnv
from ..harness.heuristic import bl_heur_actions
from ..mdp.observation import ObservationBuilder
from ..mdp.reward import RewardKind, combine_rewards, reward_from_satisfaction, satisfaction
from ..misc.errors import ConfigurationError, ContractError
from ..misc.simplexops import sample_dirichlet
from ..td3.agent import Td3Agent
from ..td3.hyper import Td3Hyper
from .metrics import MetricsLog
from .replay import ReplayBuffer, Transition
from .schedule import Phase, PhaseSchedule

LOG = structlog.get_logger(__name__)


class LearningAgent:
    """A TD3 learner with its own replay buffer, exploration state and random stream.

    ``groups`` > 1 makes the action a concatenation of ``groups`` partitions, each on its own simplex.
    """

    def __init__(
        self,
        state_dim: int,
        action_dim: int,
        hyper: Optional[Td3Hyper] = None,
        groups: int = 1,
        seed: int = 0,
        buffer_capacity: int = 20000,
    ):
        net_seq, own_seq = np.random.SeedSequence(seed).spawn(2)
        self.td3 = Td3Agent(state_dim, action_dim, hyper, groups=groups, seed=int(net_seq.generate_state(1)[0]))
        self.buffer = ReplayBuffer(state_dim, action_dim, buffer_capacity)
        self.rng = np.random.default_rng(own_seq)
        self.epsilon = 1.0

    @property
    def state_dim(self) -> int:
        return self.td3.state_dim

    @property
    def action_dim(self) -> int:
        return self.td3.action_dim

    @property
    def groups(self) -> int:
        return self.td3.groups

    @property
    def hyper(self) -> Td3Hyper:
        return self.td3.hyper

    def reset_epsilon(self, epsilon0: float) -> None:
        self.epsilon = float(epsilon0)

    def oriented_choice(self, t: int, schedule: PhaseSchedule, hint: Optional[np.ndarray]) -> np.ndarray:
        """Heuristic hint with the scheduled probability, otherwise a uniform random partition."""
        use_hint = self.rng.random() < schedule.heuristic_probability(t)
        if use_hint and hint is not None:
            return np.array(hint, dtype=np.float64)
        return sample_dirichlet(self.rng, self.action_dim // self.groups, self.groups)

    def choose(self, x: np.ndarray, t: int, schedule: PhaseSchedule, hint: Optional[np.ndarray] = None) -> np.ndarray:
        phase = schedule.phase(t)
        if phase == Phase.EVAL:
            return self.td3.act(x)
        if phase == Phase.EXPLORE:
            return self.oriented_choice(t, schedule, hint)
        if self.rng.random() < self.epsilon:
            return self.oriented_choice(t, schedule, hint)
        return self.td3.act(x, logit_noise=self.hyper.exploration_noise)

    def decay_epsilon(self, t: int, schedule: PhaseSchedule) -> None:
        if schedule.phase(t) == Phase.TRAIN:
            self.epsilon *= schedule.decay

    def select_action(
        self,
        x: np.ndarray,
        t: int,
        schedule: PhaseSchedule,
        hint: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        a = self.choose(x, t, schedule, hint)
        self.decay_epsilon(t, schedule)
        return a

    def observe_and_store(self, transition: Transition) -> None:
        self.buffer.add(transition)

    def maybe_train(self, t: int, schedule: PhaseSchedule) -> Optional[Tuple[float, Optional[float]]]:
        """One TD3 step when in training and the buffer holds a full minibatch."""
        if schedule.phase(t) != Phase.TRAIN or len(self.buffer) < self.hyper.batch_size:
            return None
        return self.td3.train_step(self.buffer.sample(self.hyper.batch_size, self.rng))


def make_agents(
    builder: ObservationBuilder,
    hyper: Optional[Td3Hyper] = None,
    seed: int = 0,
    buffer_capacity: int = 20000,
) -> List[LearningAgent]:
    """One agent per cell, with independent seeds derived from ``seed``."""
    N = builder.topology.num_slices
    seqs = np.random.SeedSequence(seed).spawn(builder.topology.num_cells)
    return [
        LearningAgent(builder.dim(k), N, hyper, seed=int(s.generate_state(1)[0]), buffer_capacity=buffer_capacity)
        for k, s in enumerate(seqs)
    ]


def _check_agents(builder: ObservationBuilder, agents: Sequence[LearningAgent]) -> None:
    K = builder.topology.num_cells
    if len(agents) != K:
        raise ConfigurationError(f"{len(agents)} agents for {K} cells.")
    for k, agent in enumerate(agents):
        if agent.state_dim != builder.dim(k) or agent.action_dim != builder.topology.num_slices:
            raise ConfigurationError(
                f"Agent {k} expects state {agent.state_dim} / action {agent.action_dim}, "
                f"cell provides {builder.dim(k)} / {builder.topology.num_slices}.",
            )


def run_dirp(
    env: NetworkEnv,
    agents: Sequence[LearningAgent],
    schedule: PhaseSchedule,
    reward_kind: RewardKind = RewardKind.MAX_MIN,
    coordination: bool = True,
    scheme: str = "dirp",
    seed: int = 0,
    progress: bool = False,
    frozen: Collection[int] = (),
    log: Optional[MetricsLog] = None,
) -> MetricsLog:
    """Run every cell's agent in lockstep against ``env`` over the schedule.

    Each agent observes its local state (plus the neighbor message when ``coordination`` is on), acts, and
    learns from its own local reward. Agents of ``frozen`` cells act greedily and neither store nor learn.
    Rows go to ``log`` when given (a streaming log appends them to its CSV as they come).
    """
    reward_kind = RewardKind(reward_kind)
    builder = ObservationBuilder(env.topology, env.slices, coordination=coordination)
    _check_agents(builder, agents)
    if env.t != schedule.start:
        raise ContractError(f"Environment at t={env.t}, schedule starts at {schedule.start}.")

    frozen = set(frozen)
    for k, agent in enumerate(agents):
        if k not in frozen:
            agent.reset_epsilon(schedule.epsilon0)

    log = log if log is not None else MetricsLog(scheme, seed)
    kpi = env.observe()
    obs = builder.all_local(kpi)
    current = None

    for _ in tqdm(range(schedule.horizon), desc=scheme, disable=not progress, leave=False):
        t = env.t
        phase = schedule.phase(t)
        if phase != current:
            LOG.info("phase started", scheme=scheme, phase=phase.value, t=t, seed=seed)
            current = phase

        hints = bl_heur_actions(kpi)
        actions = np.stack(
            [
                agent.td3.act(obs[k]) if k in frozen else agent.select_action(obs[k], t, schedule, hints[k])
                for k, agent in enumerate(agents)
            ],
        )
        next_kpi = env.step(actions)
        thr_sat, delay_sat = satisfaction(next_kpi, env.slices)
        local = reward_from_satisfaction(thr_sat, delay_sat, reward_kind)
        next_obs = builder.all_local(next_kpi)

        for k, agent in enumerate(agents):
            if k in frozen:
                continue
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
        "run finished",
        scheme=scheme,
        seed=seed,
        steps=schedule.horizon,
        train_steps=[a.td3.train_steps for a in agents],
    )
    return log
