from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd
import structlog

from ..misc.errors import DirpError

LOG = structlog.get_logger(__name__)

CSV_COLUMNS = [
    "t",
    "phase",
    "cell",
    "slice",
    "action",
    "load",
    "throughput_sat",
    "delay_sat",
    "local_reward",
    "global_reward",
    "scheme",
    "seed",
]

# timestamps buffered before a streaming log appends them to its CSV
STREAM_FLUSH_EVERY = 100


class MetricsLog:
    """Per-timestamp record of a run. Arrays are stacked along time; per-cell arrays are [cell, slice].

    With ``path`` set the log streams: the CSV header is written at once and rows are appended every
    ``flush_every`` timestamps and on :meth:`flush`.
    """

    def __init__(
        self,
        scheme: str = "",
        seed: int = 0,
        path: Optional[Union[str, Path]] = None,
        flush_every: int = STREAM_FLUSH_EVERY,
    ):
        if flush_every < 1:
            raise DirpError(f"flush_every must be positive, got {flush_every}.")
        self.scheme = scheme
        self.seed = seed
        self.t: List[int] = []
        self.phase: List[str] = []
        self._actions: List[np.ndarray] = []
        self._load: List[np.ndarray] = []
        self._thr_sat: List[np.ndarray] = []
        self._delay_sat: List[np.ndarray] = []
        self._local: List[np.ndarray] = []
        self._global: List[float] = []
        self._demand: List[np.ndarray] = []
        self._traffic: List[np.ndarray] = []
        self.path = None if path is None else Path(path)
        self.flush_every = flush_every
        self._written = 0
        if self.path is not None:
            self._write(self.to_frame(), mode="w")

    def __len__(self) -> int:
        return len(self.t)

    def record(
        self,
        t: int,
        phase: str,
        actions: np.ndarray,
        load: np.ndarray,
        thr_sat: np.ndarray,
        delay_sat: np.ndarray,
        local_rewards: np.ndarray,
        global_reward: float,
        demand: np.ndarray,
        traffic: np.ndarray,
    ) -> None:
        self.t.append(int(t))
        self.phase.append(str(phase))
        self._actions.append(np.array(actions, dtype=np.float64))
        self._load.append(np.array(load, dtype=np.float64))
        self._thr_sat.append(np.array(thr_sat, dtype=np.float64))
        self._delay_sat.append(np.array(delay_sat, dtype=np.float64))
        self._local.append(np.array(local_rewards, dtype=np.float64))
        self._global.append(float(global_reward))
        self._demand.append(np.array(demand, dtype=np.float64))
        self._traffic.append(np.array(traffic, dtype=np.float64))
        self._maybe_flush()

    def extend(self, other: "MetricsLog", phase_prefix: str = "") -> None:
        self.t += other.t
        self.phase += [phase_prefix + p for p in other.phase]
        self._actions += other._actions
        self._load += other._load
        self._thr_sat += other._thr_sat
        self._delay_sat += other._delay_sat
        self._local += other._local
        self._global += other._global
        self._demand += other._demand
        self._traffic += other._traffic
        self._maybe_flush()

    @property
    def pending(self) -> int:
        """Timestamps recorded but not yet in the streamed CSV."""
        return len(self) - self._written if self.path is not None else 0

    def _maybe_flush(self) -> None:
        if self.pending >= self.flush_every:
            self.flush()

    def _write(self, frame: pd.DataFrame, mode: str) -> None:
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            frame.to_csv(self.path, mode=mode, header=mode == "w", index=False)
        except OSError as e:
            raise DirpError(f"Could not write metrics to {self.path}: {e}") from e

    def flush(self) -> None:
        """Append the pending timestamps to the streamed CSV."""
        if not self.pending:
            return
        self._write(self.to_frame(start=self._written), mode="a")
        LOG.debug("metrics flushed", path=str(self.path), t=self.t[-1], timestamps=self.pending)
        self._written = len(self)

    def close(self) -> Optional[Path]:
        """Flush the rest; the streamed CSV then holds exactly :meth:`to_frame`."""
        if self.path is None:
            return None
        self.flush()
        LOG.info("metrics written", path=str(self.path), timestamps=len(self))
        return self.path

    def select(self, mask: np.ndarray) -> "MetricsLog":
        """Sub-log of the timestamps where ``mask`` is true."""
        out = MetricsLog(self.scheme, self.seed)
        for i in np.flatnonzero(mask):
            out.t.append(self.t[i])
            out.phase.append(self.phase[i])
            out._actions.append(self._actions[i])
            out._load.append(self._load[i])
            out._thr_sat.append(self._thr_sat[i])
            out._delay_sat.append(self._delay_sat[i])
            out._local.append(self._local[i])
            out._global.append(self._global[i])
            out._demand.append(self._demand[i])
            out._traffic.append(self._traffic[i])
        return out

    def phase_mask(self, *phases: str) -> np.ndarray:
        return np.isin(np.array(self.phase, dtype=object), list(phases))

    @property
    def actions(self) -> np.ndarray:
        return np.stack(self._actions)

    @property
    def load(self) -> np.ndarray:
        return np.stack(self._load)

    @property
    def thr_sat(self) -> np.ndarray:
        return np.stack(self._thr_sat)

    @property
    def delay_sat(self) -> np.ndarray:
        return np.stack(self._delay_sat)

    @property
    def local_rewards(self) -> np.ndarray:
        return np.stack(self._local)

    @property
    def global_rewards(self) -> np.ndarray:
        return np.array(self._global)

    @property
    def demand(self) -> np.ndarray:
        return np.stack(self._demand)

    @property
    def traffic(self) -> np.ndarray:
        return np.stack(self._traffic)

    def demand_share(self) -> np.ndarray:
        d = self.demand
        total = d.sum(axis=-1, keepdims=True)
        n = d.shape[-1]
        return np.where(total > 0, d / np.where(total > 0, total, 1.0), 1.0 / n)

    def to_frame(self, start: int = 0) -> pd.DataFrame:
        """Long format: one row per timestamp, cell and slice, from timestamp index ``start`` on."""
        if start >= len(self.t):
            return pd.DataFrame(columns=CSV_COLUMNS)
        actions = np.stack(self._actions[start:])
        T, K, N = actions.shape
        tt, kk, nn = np.meshgrid(np.arange(T), np.arange(K), np.arange(N), indexing="ij")
        tt, kk, nn = tt.ravel(), kk.ravel(), nn.ravel()
        return pd.DataFrame(
            {
                "t": np.asarray(self.t[start:])[tt],
                "phase": np.asarray(self.phase[start:], dtype=object)[tt],
                "cell": kk,
                "slice": nn,
                "action": actions.ravel(),
                "load": np.stack(self._load[start:]).ravel(),
                "throughput_sat": np.stack(self._thr_sat[start:]).ravel(),
                "delay_sat": np.stack(self._delay_sat[start:]).ravel(),
                "local_reward": np.stack(self._local[start:])[tt, kk],
                "global_reward": np.asarray(self._global[start:])[tt],
                "scheme": self.scheme,
                "seed": self.seed,
            },
            columns=CSV_COLUMNS,
        )

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            self.to_frame().to_csv(path, index=False)
        except OSError as e:
            raise DirpError(f"Could not write metrics to {path}: {e}") from e
        LOG.info("metrics written", path=str(path), rows=len(self) and len(self) * self._actions[0].size)
        return path

    def same_values(self, other: "MetricsLog", ignore_phase: bool = False) -> bool:
        """Exact equality of every logged quantity (scheme and seed labels excluded)."""
        if self.t != other.t or (not ignore_phase and self.phase != other.phase):
            return False
        pairs = [
            (self._actions, other._actions),
            (self._load, other._load),
            (self._thr_sat, other._thr_sat),
            (self._delay_sat, other._delay_sat),
            (self._local, other._local),
            (self._demand, other._demand),
        ]
        if self._global != other._global:
            return False
        return all(len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b)) for a, b in pairs)


def concat_logs(logs: List[MetricsLog], scheme: Optional[str] = None) -> MetricsLog:
    out = MetricsLog(scheme if scheme is not None else (logs[0].scheme if logs else ""), logs[0].seed if logs else 0)
    for log in logs:
        out.extend(log)
    return out
