from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import structlog
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from scipy.stats import pearsonr

from ..agent.metrics import MetricsLog
from ..agent.schedule import Phase
from ..misc.errors import ConfigurationError, DirpError

LOG = structlog.get_logger(__name__)

START_WINDOW = 100
CONVERGENCE_WINDOW = 50
CONVERGENCE_FRACTION = 0.95


class Aggregation(str, Enum):
    """How per-slice satisfaction is reduced over the evaluation samples."""

    TIME_MEAN = "time-mean"
    FRACTION_SATISFIED = "fraction-satisfied"


class SeedSummary(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int
    mean_eval_reward: float
    min_slice_throughput_satisfaction: float
    min_slice_delay_satisfaction: float
    slice_throughput_satisfaction: List[float]
    slice_delay_satisfaction: List[float]
    mean_satisfaction: float
    fully_satisfied_ratio: float
    violation_ratio: float
    start_reward: float
    convergence_step: Optional[int] = None
    traffic_correlation: List[Optional[float]] = Field(default_factory=list)
    reward_trajectory: List[float]
    phases: List[str]
    throughput_samples: List[List[float]]
    delay_samples: List[List[float]]
    trace_cell: int = 0
    action_trace: List[List[float]] = Field(default_factory=list)
    traffic_trace: List[List[float]] = Field(default_factory=list)


class RunSummary(BaseModel):
    """Metrics of one scheme over several seeds. Scalars are seed means; per-seed details are in ``runs``."""

    model_config = ConfigDict(extra="forbid")

    scheme: str
    reward: str
    aggregation: Aggregation = Aggregation.TIME_MEAN
    seeds: List[int]
    mean_eval_reward: float
    min_slice_throughput_satisfaction: float
    min_slice_delay_satisfaction: float
    mean_satisfaction: float
    fully_satisfied_ratio: float
    violation_ratio: float
    start_reward: float
    convergence_step: Optional[float] = None
    reward_trajectory: List[float]
    runs: List[SeedSummary]

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.model_dump_json(indent=1))
        except OSError as e:
            raise DirpError(f"Could not write summary {path}: {e}") from e
        LOG.info("summary written", path=str(path), scheme=self.scheme)
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunSummary":
        path = Path(path)
        try:
            return cls.model_validate_json(path.read_text())
        except OSError as e:
            raise DirpError(f"Could not read summary {path}: {e}") from e
        except ValidationError as e:
            raise ConfigurationError(f"{path}: malformed summary: {e}") from e


def _slice_satisfaction(sat: np.ndarray, aggregation: Aggregation) -> np.ndarray:
    """Per-slice reduction of satisfaction samples shaped [t, cell, slice]."""
    if aggregation == Aggregation.FRACTION_SATISFIED:
        return (sat >= 1.0).mean(axis=(0, 1))
    return np.minimum(sat, 1.0).mean(axis=(0, 1))


def convergence_step(rewards: np.ndarray, target: float, window: int = CONVERGENCE_WINDOW) -> Optional[int]:
    """First index whose trailing mean reaches ``CONVERGENCE_FRACTION`` of ``target``."""
    if len(rewards) < window:
        return None
    trailing = np.convolve(rewards, np.ones(window) / window, mode="valid")
    hits = np.flatnonzero(trailing >= CONVERGENCE_FRACTION * target)
    return int(hits[0] + window - 1) if hits.size else None


def traffic_correlation(actions: np.ndarray, share: np.ndarray) -> List[Optional[float]]:
    """Per cell, the Pearson correlation between the action and the demand share of its busiest slice."""
    out: List[Optional[float]] = []
    for k in range(actions.shape[1]):
        n = int(np.argmax(share[:, k].mean(axis=0)))
        a, s = actions[:, k, n], share[:, k, n]
        if len(a) < 2 or np.std(a) == 0 or np.std(s) == 0:
            out.append(None)
            continue
        out.append(float(pearsonr(a, s).statistic))
    return out


def summarize_log(
    log: MetricsLog,
    aggregation: Aggregation = Aggregation.TIME_MEAN,
    trace_cell: int = 0,
    start_window: int = START_WINDOW,
) -> SeedSummary:
    """Reduce one run. Evaluation metrics use the ``eval`` phase, the start window the first steps after any
    generalist stage."""
    aggregation = Aggregation(aggregation)
    ev = log.select(log.phase_mask(Phase.EVAL.value))
    if len(ev) == 0:
        raise ConfigurationError(f"Run of '{log.scheme}' (seed {log.seed}) has no evaluation phase.")

    learning = log.select(~np.char.startswith(np.array(log.phase, dtype=str), "gen-"))
    rewards = learning.global_rewards

    thr, delay = ev.thr_sat, ev.delay_sat
    thr_slice = _slice_satisfaction(thr, aggregation)
    delay_slice = _slice_satisfaction(delay, aggregation)
    level = np.minimum(np.minimum(thr, delay), 1.0)
    met = (thr >= 1.0) & (delay >= 1.0)
    mean_eval = float(ev.global_rewards.mean())
    N = thr.shape[-1]

    return SeedSummary(
        seed=log.seed,
        mean_eval_reward=mean_eval,
        min_slice_throughput_satisfaction=float(thr_slice.min()),
        min_slice_delay_satisfaction=float(delay_slice.min()),
        slice_throughput_satisfaction=thr_slice.tolist(),
        slice_delay_satisfaction=delay_slice.tolist(),
        mean_satisfaction=float(level.mean()),
        fully_satisfied_ratio=float(met.all(axis=-1).mean()),
        violation_ratio=float((~met).mean()),
        start_reward=float(rewards[:start_window].mean()),
        convergence_step=convergence_step(rewards, mean_eval),
        traffic_correlation=traffic_correlation(ev.actions, ev.demand_share()),
        reward_trajectory=log.global_rewards.tolist(),
        phases=list(log.phase),
        throughput_samples=[thr[:, :, n].ravel().tolist() for n in range(N)],
        delay_samples=[delay[:, :, n].ravel().tolist() for n in range(N)],
        trace_cell=trace_cell,
        action_trace=ev.actions[:, trace_cell].tolist(),
        traffic_trace=ev.traffic.tolist(),
    )


def _mean(values: Sequence[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def aggregate(runs: Sequence[SeedSummary], scheme: str, reward: str, aggregation: Aggregation) -> RunSummary:
    if not runs:
        raise ConfigurationError("Nothing to aggregate.")
    lengths = {len(r.reward_trajectory) for r in runs}
    if len(lengths) != 1:
        raise ConfigurationError(f"Runs of '{scheme}' have different horizons {sorted(lengths)}.")

    def mean_of(name: str) -> float:
        return float(np.mean([getattr(r, name) for r in runs]))

    return RunSummary(
        scheme=scheme,
        reward=reward,
        aggregation=aggregation,
        seeds=[r.seed for r in runs],
        mean_eval_reward=mean_of("mean_eval_reward"),
        min_slice_throughput_satisfaction=mean_of("min_slice_throughput_satisfaction"),
        min_slice_delay_satisfaction=mean_of("min_slice_delay_satisfaction"),
        mean_satisfaction=mean_of("mean_satisfaction"),
        fully_satisfied_ratio=mean_of("fully_satisfied_ratio"),
        violation_ratio=mean_of("violation_ratio"),
        start_reward=mean_of("start_reward"),
        convergence_step=_mean([r.convergence_step for r in runs]),
        reward_trajectory=np.mean([r.reward_trajectory for r in runs], axis=0).tolist(),
        runs=list(runs),
    )


COMPARE_COLUMNS = [
    ("mean_eval_reward", "eval reward"),
    ("min_slice_throughput_satisfaction", "min thr sat"),
    ("min_slice_delay_satisfaction", "min delay sat"),
    ("mean_satisfaction", "mean sat"),
    ("fully_satisfied_ratio", "fully sat"),
    ("violation_ratio", "violation"),
    ("start_reward", "start reward"),
    ("convergence_step", "converged at"),
]


def compare_frame(summaries: Sequence[RunSummary]) -> pd.DataFrame:
    """Headline metrics of several summaries, one row per scheme and reward."""
    labels = [label for _, label in COMPARE_COLUMNS]
    rows = [
        {"scheme": s.scheme, "reward": s.reward, **{label: getattr(s, name) for name, label in COMPARE_COLUMNS}}
        for s in summaries
    ]
    return pd.DataFrame(rows, columns=["scheme", "reward", *labels])


def _metric(value) -> str:
    return "-" if pd.isna(value) else f"{value:.4f}"


def _step(value) -> str:
    return "-" if pd.isna(value) else f"{value:.0f}"


def compare_table(summaries: Sequence[RunSummary]) -> str:
    formatters = {label: _step if name == "convergence_step" else _metric for name, label in COMPARE_COLUMNS}
    return compare_frame(summaries).to_string(index=False, formatters=formatters)
