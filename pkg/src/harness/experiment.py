from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Literal, Tuple, Union

import structlog
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..agent.dirp import LearningAgent, make_agents, run_dirp
from ..agent.metrics import MetricsLog
from ..agent.schedule import PhaseSchedule
from ..env.simulator import NetworkEnv, reset
from ..io.scenario import load_scenario
from ..mdp.observation import ObservationBuilder
from ..mdp.reward import RewardKind
from ..misc.errors import ConfigurationError, DirpError
from ..td3.hyper import Td3Hyper
from ..transfer.pipeline import tl_dirp_pipeline
from ..transfer.scheme import DEFAULT_OFFLINE_EPOCHS, TransferOptions, TransferScheme
from .baselines import CENTRALIZED_EXPLORATION, centralized_agent, run_bl_heur, run_centralized
from .summary import Aggregation, RunSummary, SeedSummary, aggregate, summarize_log

LOG = structlog.get_logger(__name__)


class Scheme(str, Enum):
    BL_CEN = "bl-cen"
    BL_DIST = "bl-dist"
    BL_HEUR = "bl-heur"
    DIRP = "dirp"
    GEN = "gen"
    SPEC = "spec"
    SPEC_INSTANCE = "spec-instance"
    SPEC_MODEL = "spec-model"
    TL_DIRP = "tl-dirp"

    @property
    def is_transfer(self) -> bool:
        return self.value in {s.value for s in TransferScheme}


HyperValue = Union[float, int, List[int]]


class ExperimentConfig(BaseModel):
    """One scheme under one reward over several seeds."""

    model_config = ConfigDict(extra="forbid")

    scenario: str = "default"
    scenario_seed: int = 0
    user_model: Literal["mask", "binomial"] = "mask"
    scheme: Scheme = Scheme.DIRP
    reward: RewardKind = RewardKind.MAX_MIN
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2], min_length=1)
    phases: PhaseSchedule = PhaseSchedule()
    centralized_exploration: int = Field(default=CENTRALIZED_EXPLORATION, ge=0)
    generalist: PhaseSchedule = PhaseSchedule(exploration=100, training=5000, evaluation=0)
    hyper: Dict[str, HyperValue] = Field(default_factory=dict)
    buffer_capacity: int = Field(default=20000, gt=0)
    offline_epochs: int = Field(default=DEFAULT_OFFLINE_EPOCHS, ge=0)
    output_dir: str = "runs"
    aggregation: Aggregation = Aggregation.TIME_MEAN
    save_checkpoints: bool = True
    save_packages: bool = False
    n_jobs: int = 1

    @model_validator(mode="after")
    def _consistent(self) -> "ExperimentConfig":
        if self.phases.evaluation < 1:
            raise ValueError("the evaluation phase must not be empty")
        if self.phases.start != 0 or self.generalist.start != 0:
            raise ValueError("phase schedules start at 0; runs place them on the clock")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        self.td3_hyper()
        return self

    def td3_hyper(self) -> Td3Hyper:
        try:
            if self.scheme == Scheme.BL_CEN:
                return Td3Hyper.centralized(**self.hyper)
            return Td3Hyper(**self.hyper)
        except ValidationError as e:
            raise ValueError(f"invalid hyper overrides: {e}") from e

    def with_overrides(self, **updates) -> "ExperimentConfig":
        """Validated copy with some fields replaced; ``None`` values are ignored."""
        data = self.model_dump()
        data.update({k: v for k, v in updates.items() if v is not None})
        try:
            return ExperimentConfig.model_validate(data)
        except ValidationError as e:
            raise ConfigurationError(f"Invalid overrides {updates}: {e}") from e

    @property
    def name(self) -> str:
        return f"{self.scheme.value}-{self.reward.value}"

    @property
    def run_dir(self) -> Path:
        return Path(self.output_dir) / self.name


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise DirpError(f"Could not read config {path}: {e}") from e
    try:
        return ExperimentConfig.model_validate_json(text)
    except ValidationError as e:
        raise ConfigurationError(f"{path}: invalid experiment config: {e}") from e


Runner = Callable[
    [NetworkEnv, ExperimentConfig, int, bool, MetricsLog],
    Tuple[MetricsLog, Dict[str, LearningAgent], list],
]


def _run_bl_heur(env, config, seed, progress, log):
    return run_bl_heur(env, config.phases, config.reward, seed=seed, progress=progress, log=log), {}, []


def _run_bl_dist(env, config, seed, progress, log):
    builder = ObservationBuilder(env.topology, env.slices, coordination=False)
    agents = make_agents(builder, config.td3_hyper(), seed=seed, buffer_capacity=config.buffer_capacity)
    log = run_dirp(env, agents, config.phases, config.reward, False, "bl-dist", seed, progress, log=log)
    return log, {f"cell{k:02d}": a for k, a in enumerate(agents)}, []


def _run_dirp(env, config, seed, progress, log):
    builder = ObservationBuilder(env.topology, env.slices, coordination=True)
    agents = make_agents(builder, config.td3_hyper(), seed=seed, buffer_capacity=config.buffer_capacity)
    log = run_dirp(env, agents, config.phases, config.reward, True, "dirp", seed, progress, log=log)
    return log, {f"cell{k:02d}": a for k, a in enumerate(agents)}, []


def _run_bl_cen(env, config, seed, progress, log):
    phases = {**config.phases.model_dump(), "exploration": config.centralized_exploration}
    schedule = PhaseSchedule.model_validate(phases)
    agent = centralized_agent(env, config.td3_hyper(), seed=seed, buffer_capacity=config.buffer_capacity)
    log = run_centralized(env, agent, schedule, config.reward, seed=seed, progress=progress, log=log)
    return log, {"central": agent}, []


def _run_transfer(env, config, seed, progress, log):
    scheme = TransferScheme(config.scheme.value)
    result = tl_dirp_pipeline(
        env,
        config.generalist,
        config.phases,
        scheme,
        config.reward,
        options=TransferOptions.for_scheme(scheme, config.offline_epochs),
        hyper=config.td3_hyper(),
        seed=seed,
        buffer_capacity=config.buffer_capacity,
        progress=progress,
        log=log,
    )
    agents = {f"cell{k:02d}": a for k, a in enumerate(result.specialists)}
    if result.generalist is not None:
        agents["generalist"] = result.generalist
    return result.log, agents, result.packages


RUNNERS: Dict[Scheme, Runner] = {
    Scheme.BL_HEUR: _run_bl_heur,
    Scheme.BL_DIST: _run_bl_dist,
    Scheme.BL_CEN: _run_bl_cen,
    Scheme.DIRP: _run_dirp,
    **{s: _run_transfer for s in Scheme if s.is_transfer},
}


def run_seed(config: ExperimentConfig, seed: int, progress: bool = False) -> Tuple[MetricsLog, SeedSummary]:
    """Run one seed below the config's run directory, streaming its metrics CSV and writing checkpoints."""
    topology, slices, mask = load_scenario(config.scenario, config.scenario_seed)
    env = reset(topology, slices, mask, seed=seed, user_model=config.user_model)
    LOG.info("run started", scheme=config.scheme.value, reward=config.reward.value, seed=seed)

    seed_dir = config.run_dir / f"seed{seed}"
    log = MetricsLog(config.scheme.value, seed, path=seed_dir / "metrics.csv")
    log, agents, packages = RUNNERS[config.scheme](env, config, seed, progress, log)
    log.close()
    if config.save_checkpoints:
        for name, agent in agents.items():
            agent.td3.save(seed_dir / "checkpoints" / f"{name}.json", {"seed": seed, "scheme": config.scheme.value})
    if config.save_packages:
        for package in packages:
            package.save(seed_dir / "packages" / f"cell{package.target_cell:02d}")
    return log, summarize_log(log, config.aggregation)


def run_experiment(config: ExperimentConfig, progress: bool = False) -> RunSummary:
    """Run every seed (in parallel threads when ``n_jobs`` > 1), aggregate by the seed mean and write
    ``summary.json`` next to the per-seed directories."""
    results = Parallel(n_jobs=config.n_jobs, prefer="threads")(
        delayed(run_seed)(config, seed, progress and config.n_jobs == 1) for seed in config.seeds
    )
    summary = aggregate([s for _, s in results], config.scheme.value, config.reward.value, config.aggregation)
    try:
        config.run_dir.mkdir(parents=True, exist_ok=True)
        (config.run_dir / "config.json").write_text(config.model_dump_json(indent=1))
    except OSError as e:
        raise DirpError(f"Could not write to {config.run_dir}: {e}") from e
    summary.save(config.run_dir / "summary.json")
    LOG.info(
        "experiment finished",
        scheme=summary.scheme,
        reward=summary.reward,
        seeds=summary.seeds,
        mean_eval_reward=round(summary.mean_eval_reward, 4),
    )
    return summary


def load_summaries(paths: List[Union[str, Path]]) -> List[RunSummary]:
    """Summaries from files or run directories (``<dir>/summary.json``)."""
    out = []
    for p in paths:
        p = Path(p)
        out.append(RunSummary.load(p / "summary.json" if p.is_dir() else p))
    return out

