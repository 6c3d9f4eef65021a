from enum import Enum
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import structlog  # noqa: E402

from ..misc.errors import ConfigurationError, DirpError  # noqa: E402
from .summary import RunSummary  # noqa: E402

LOG = structlog.get_logger(__name__)

SMOOTHING_WINDOW = 50


class PlotKind(str, Enum):
    REWARD_CURVE = "reward-curve"
    SATISFACTION_CDF = "satisfaction-cdf"
    ACTION_VS_TRAFFIC = "action-vs-traffic"


def survival_curve(samples: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Empirical 1 - F(x) as a step curve starting at (0, 1)."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    if x.size == 0:
        raise ConfigurationError("No samples for the survival curve.")
    n = x.size
    xs = np.concatenate([[min(0.0, x[0])], x])
    ys = np.concatenate([[1.0], 1.0 - np.arange(1, n + 1) / n])
    return xs, ys


def _label(s: RunSummary) -> str:
    return f"{s.scheme} ({s.reward})"


def _reward_curve(summaries: Sequence[RunSummary]):
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for s in summaries:
        smooth = pd.Series(s.reward_trajectory).rolling(SMOOTHING_WINDOW, min_periods=1).mean()
        ax.plot(np.arange(len(smooth)), smooth.to_numpy(), label=_label(s), linewidth=1.2)
    ax.set_xlabel("Timestamp")
    ax.set_ylabel(f"Global reward (moving average {SMOOTHING_WINDOW})")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower right")
    return fig


def _satisfaction_cdf(summaries: Sequence[RunSummary]):
    fig, axes = plt.subplots(1, 2, figsize=(11, 4.5), sharey=True)
    for ax, attr, title in (
        (axes[0], "throughput_samples", "Throughput satisfaction"),
        (axes[1], "delay_samples", "Delay satisfaction"),
    ):
        for s in summaries:
            N = len(getattr(s.runs[0], attr))
            for n in range(N):
                pooled = np.concatenate([getattr(r, attr)[n] for r in s.runs])
                xs, ys = survival_curve(pooled)
                ax.step(xs, ys, where="post", label=f"{_label(s)} slice {n}", linewidth=1.0)
        ax.set_title(title)
        ax.set_xlabel("Satisfaction level")
        ax.set_xlim(left=0.0)
        ax.grid(True, alpha=0.3)
    axes[0].set_ylabel("1 - F(x)")
    axes[1].legend(loc="upper right", fontsize=7)
    return fig


def _action_vs_traffic(summaries: Sequence[RunSummary]):
    run = summaries[0].runs[0]
    actions = np.asarray(run.action_trace)
    traffic = np.asarray(run.traffic_trace)
    if actions.size == 0:
        raise ConfigurationError(f"Summary of '{summaries[0].scheme}' has no action trace.")
    t = np.arange(actions.shape[0])
    fig, ax = plt.subplots(figsize=(9, 4.5))
    ax.stackplot(t, actions.T, labels=[f"slice {n}" for n in range(actions.shape[1])], alpha=0.8)
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel("Evaluation timestamp")
    ax.set_ylabel(f"Resource ratio, cell {run.trace_cell}")
    twin = ax.twinx()
    for n in range(traffic.shape[1]):
        twin.plot(t, traffic[:, n], linestyle="--", linewidth=1.0, color="k", alpha=0.4 + 0.6 * n / traffic.shape[1])
    twin.set_ylabel("Traffic mask")
    twin.set_ylim(0.0, 1.05)
    ax.legend(loc="upper left", fontsize=8)
    return fig


_PLOTTERS = {
    PlotKind.REWARD_CURVE: _reward_curve,
    PlotKind.SATISFACTION_CDF: _satisfaction_cdf,
    PlotKind.ACTION_VS_TRAFFIC: _action_vs_traffic,
}


def emit_plots(
    summaries: Sequence[RunSummary],
    kind: Union[PlotKind, str],
    out: Union[str, Path],
) -> List[Path]:
    """Write one SVG for ``kind`` into the directory ``out``."""
    kind = PlotKind(kind)
    if not summaries or any(not s.runs for s in summaries):
        raise ConfigurationError("No summaries to plot.")
    out = Path(out)
    path = out / f"{kind.value}.svg"
    fig = _PLOTTERS[kind](summaries)
    try:
        out.mkdir(parents=True, exist_ok=True)
        fig.tight_layout()
        fig.savefig(path, format="svg")
    except OSError as e:
        raise DirpError(f"Could not write plot {path}: {e}") from e
    finally:
        plt.close(fig)
    LOG.info("plot written", kind=kind.value, path=str(path))
    return [path]
