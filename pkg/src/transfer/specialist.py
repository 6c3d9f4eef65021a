from typing import List, Optional, Sequence, Tuple, Union

import structlog
from joblib import Parallel, delayed

from ..agent.dirp import LearningAgent, run_dirp
from ..agent.metrics import MetricsLog
from ..agent.schedule import PhaseSchedule
from ..env.simulator import NetworkEnv
from ..mdp.observation import ObservationBuilder
from ..mdp.reward import RewardKind
from ..misc.errors import CheckpointError, ConfigurationError
from ..td3.hyper import Td3Hyper
from .package import KnowledgePackage
from .scheme import TransferOptions

LOG = structlog.get_logger(__name__)


def offline_finetune(agent: LearningAgent, epochs: int) -> int:
    """TD3 updates over the buffered transitions only, ``epochs`` passes in random minibatch order.

    The delayed actor update counts these steps like online ones. Returns the number of steps taken.
    """
    steps = 0
    for _ in range(epochs):
        for batch in agent.buffer.minibatches(agent.hyper.batch_size, agent.rng):
            agent.td3.train_step(batch)
            steps += 1
    return steps


def prepare_specialist(agent: LearningAgent, package: KnowledgePackage, options: TransferOptions) -> LearningAgent:
    """Load the transferred networks and instances into ``agent``, then run the offline stage if enabled."""
    if package.state_dim != agent.state_dim or package.action_dim != agent.action_dim:
        raise CheckpointError(
            f"Package for cell {package.target_cell} carries state {package.state_dim} / action "
            f"{package.action_dim}, specialist expects {agent.state_dim} / {agent.action_dim}.",
        )
    if package.models is not None:
        agent.td3.load_networks(package.models)
        agent.td3.sync_targets()
    if package.instances:
        agent.buffer.extend(package.instances)

    steps = 0
    if options.offline_epochs > 0 and len(agent.buffer) > 0:
        steps = offline_finetune(agent, options.offline_epochs)
    LOG.debug(
        "specialist prepared",
        cell=package.target_cell,
        models=package.models is not None,
        instances=len(package.instances),
        offline_steps=steps,
    )
    return agent


def specialist_schedule(
    schedule: PhaseSchedule,
    options: TransferOptions,
    epsilon0: Optional[float] = None,
) -> PhaseSchedule:
    """Online schedule of the specialists.

    A frozen generalist is only evaluated. Exploration is dropped when knowledge was transferred and the
    options say so. With transferred models, ``epsilon0`` continues the generalist's exploration rate.
    """
    if options.frozen:
        return PhaseSchedule(exploration=0, training=0, evaluation=schedule.horizon, start=schedule.start)
    out = schedule
    if options.skip_exploration and options.transfers_anything and schedule.training + schedule.evaluation > 0:
        out = out.without_exploration()
    if options.transfer_models and epsilon0 is not None:
        out = out.model_copy(update={"epsilon0": float(epsilon0)})
    return out


def finetune_specialists(
    env: NetworkEnv,
    specialists: Sequence[LearningAgent],
    packages: Sequence[KnowledgePackage],
    schedule: PhaseSchedule,
    options: TransferOptions,
    reward_kind: RewardKind = RewardKind.MAX_MIN,
    scheme: str = "tl-dirp",
    seed: int = 0,
    epsilon0: Optional[float] = None,
    n_jobs: int = 1,
    progress: bool = False,
    log: Optional[MetricsLog] = None,
) -> MetricsLog:
    """Prepare every cell's specialist from its package, then finetune them together online.

    Preparation (including offline finetuning) runs in parallel threads. No environment step happens
    before the online run.
    """
    if len(specialists) != len(packages):
        raise ConfigurationError(f"{len(packages)} packages for {len(specialists)} specialists.")
    for k, package in enumerate(packages):
        if package.target_cell != k:
            raise ConfigurationError(f"Package {k} was built for cell {package.target_cell}.")

    prepared: List[LearningAgent] = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(prepare_specialist)(agent, package, options) for agent, package in zip(specialists, packages)
    )
    online = specialist_schedule(schedule, options, epsilon0)
    LOG.info(
        "specialists prepared",
        scheme=scheme,
        cells=len(prepared),
        exploration=online.exploration,
        training=online.training,
        evaluation=online.evaluation,
        epsilon0=online.epsilon0,
    )
    return run_dirp(
        env,
        prepared,
        online,
        reward_kind,
        coordination=True,
        scheme=scheme,
        seed=seed,
        progress=progress,
        log=log,
    )


def finetune_specialist(
    env: NetworkEnv,
    cell: int,
    package: KnowledgePackage,
    schedule: PhaseSchedule,
    options: TransferOptions,
    others: Union[LearningAgent, Sequence[LearningAgent]],
    reward_kind: RewardKind = RewardKind.MAX_MIN,
    hyper: Optional[Td3Hyper] = None,
    seed: int = 0,
    epsilon0: Optional[float] = None,
    buffer_capacity: int = 20000,
    progress: bool = False,
) -> Tuple[LearningAgent, MetricsLog]:
    """Finetune the specialist of one cell while every other cell follows a fixed policy.

    ``others`` is either one agent acting for all other cells (typically the generalist) or one agent per
    cell; the entry at ``cell`` is ignored.
    """
    K = env.num_cells
    if not 0 <= cell < K:
        raise ConfigurationError(f"Cell {cell} outside a network of {K} cells.")
    if package.target_cell != cell:
        raise ConfigurationError(f"Package for cell {package.target_cell} used to finetune cell {cell}.")
    if isinstance(others, LearningAgent):
        others = [others] * K
    if len(others) != K:
        raise ConfigurationError(f"{len(others)} fixed agents for {K} cells.")

    builder = ObservationBuilder(env.topology, env.slices, coordination=True)
    specialist = LearningAgent(builder.dim(cell), env.num_slices, hyper, seed=seed, buffer_capacity=buffer_capacity)
    prepare_specialist(specialist, package, options)
    online = specialist_schedule(schedule, options, epsilon0)

    agents = list(others)
    agents[cell] = specialist
    frozen = [k for k in range(K) if k != cell]
    label = f"{package.label or 'spec'}-cell{cell:02d}"
    LOG.info("single-cell finetuning", cell=cell, scheme=label, horizon=online.horizon)
    log = run_dirp(env, agents, online, reward_kind, True, label, seed, progress, frozen=frozen)
    return specialist, log
