from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import structlog

from ..agent.dirp import LearningAgent, make_agents
from ..agent.metrics import MetricsLog
from ..agent.schedule import PhaseSchedule
from ..env.simulator import NetworkEnv
from ..mdp.observation import ObservationBuilder
from ..mdp.reward import RewardKind
from ..misc.errors import ConfigurationError
from ..td3.hyper import Td3Hyper
from .generalist import train_generalist
from .package import KnowledgePackage, build_package
from .scheme import TransferOptions, TransferScheme
from .specialist import finetune_specialists

LOG = structlog.get_logger(__name__)

GENERALIST_PHASE_PREFIX = "gen-"


@dataclass
class TransferResult:
    log: MetricsLog
    specialists: List[LearningAgent]
    generalist: Optional[LearningAgent] = None
    generalist_log: Optional[MetricsLog] = None
    packages: List[KnowledgePackage] = field(default_factory=list)

    def save_packages(self, directory: Union[str, Path]) -> List[Path]:
        return [p.save(Path(directory) / f"cell{p.target_cell:02d}") for p in self.packages]


def tl_dirp_pipeline(
    env: NetworkEnv,
    generalist_schedule: Optional[PhaseSchedule],
    schedule: PhaseSchedule,
    scheme: Union[TransferScheme, str] = TransferScheme.TL_DIRP,
    reward_kind: RewardKind = RewardKind.MAX_MIN,
    options: Optional[TransferOptions] = None,
    hyper: Optional[Td3Hyper] = None,
    seed: int = 0,
    buffer_capacity: int = 20000,
    n_jobs: int = 1,
    progress: bool = False,
    log: Optional[MetricsLog] = None,
) -> TransferResult:
    """Generalist training, per-cell packaging and specialist finetuning on one environment.

    ``schedule`` describes the specialist window relative to the end of the generalist phase. Without a
    generalist schedule nothing can be transferred and the specialists start from scratch.
    Generalist rows enter ``log`` with a phase prefix once the generalist is trained; specialist rows as they
    are produced.
    """
    scheme = TransferScheme(scheme)
    options = options if options is not None else TransferOptions.for_scheme(scheme)
    builder = ObservationBuilder(env.topology, env.slices, coordination=True)
    K = env.num_cells
    log = log if log is not None else MetricsLog(scheme.value, seed)

    generalist = None
    gen_log = None
    packages = []
    epsilon0 = None
    if generalist_schedule is not None:
        generalist, gen_log = train_generalist(
            env,
            generalist_schedule.shifted(env.t),
            reward_kind,
            hyper=hyper,
            seed=seed,
            buffer_capacity=buffer_capacity,
            progress=progress,
        )
        log.extend(gen_log, phase_prefix=GENERALIST_PHASE_PREFIX)
        epsilon0 = generalist.epsilon
        packages = [
            build_package(generalist, generalist.buffer, options, k, generalist_steps=len(gen_log), label=scheme.value)
            for k in range(K)
        ]
    elif options.transfers_anything:
        raise ConfigurationError(f"Scheme '{scheme.value}' transfers knowledge but no generalist phase is configured.")
    else:
        packages = [
            KnowledgePackage(target_cell=k, state_dim=builder.dim(k), action_dim=env.num_slices) for k in range(K)
        ]

    specialists = make_agents(builder, hyper, seed=seed, buffer_capacity=buffer_capacity)
    finetune_specialists(
        env,
        specialists,
        packages,
        schedule.shifted(env.t),
        options,
        reward_kind,
        scheme=scheme.value,
        seed=seed,
        epsilon0=epsilon0,
        n_jobs=n_jobs,
        progress=progress,
        log=log,
    )
    return TransferResult(
        log=log,
        specialists=specialists,
        generalist=generalist,
        generalist_log=gen_log,
        packages=packages,
    )


def run_tl_dirp(
    env: NetworkEnv,
    generalist_schedule: Optional[PhaseSchedule],
    schedule: PhaseSchedule,
    scheme: Union[TransferScheme, str] = TransferScheme.TL_DIRP,
    reward_kind: RewardKind = RewardKind.MAX_MIN,
    **kwargs,
) -> MetricsLog:
    return tl_dirp_pipeline(env, generalist_schedule, schedule, scheme, reward_kind, **kwargs).log
