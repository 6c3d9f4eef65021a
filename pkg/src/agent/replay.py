from dataclasses import dataclass
from typing import Iterable, Iterator, List, Optional

import numpy as np

from ..misc.errors import ContractError
from ..td3.agent import TransitionBatch


@dataclass
class Transition:
    """One replay instance ((s, c), a, (s', c'), r) with the timestamp and the cell that produced it."""

    state: np.ndarray
    action: np.ndarray
    next_state: np.ndarray
    reward: float
    timestamp: int = 0
    cell: int = -1


class ReplayBuffer:
    """Bounded FIFO of transitions backed by preallocated arrays."""

    def __init__(self, state_dim: int, action_dim: int, capacity: int = 20000):
        if capacity < 1:
            raise ContractError("Replay capacity must be positive.")
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.capacity = capacity

        self._states = np.zeros((capacity, state_dim))
        self._actions = np.zeros((capacity, action_dim))
        self._next_states = np.zeros((capacity, state_dim))
        self._rewards = np.zeros(capacity)
        self._timestamps = np.zeros(capacity, dtype=np.int64)
        self._cells = np.zeros(capacity, dtype=np.int64)

        self._ptr = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def add(self, tr: Transition) -> None:
        state = np.asarray(tr.state, dtype=np.float64)
        next_state = np.asarray(tr.next_state, dtype=np.float64)
        action = np.asarray(tr.action, dtype=np.float64)
        if state.shape != (self.state_dim,) or next_state.shape != (self.state_dim,):
            raise ContractError(f"Transition states of shape {state.shape}, buffer expects ({self.state_dim},).")
        if action.shape != (self.action_dim,):
            raise ContractError(f"Transition action of shape {action.shape}, buffer expects ({self.action_dim},).")
        if not np.isfinite(tr.reward):
            raise ContractError(f"Nonfinite reward {tr.reward} at t={tr.timestamp}.")

        i = self._ptr
        self._states[i] = state
        self._actions[i] = action
        self._next_states[i] = next_state
        self._rewards[i] = tr.reward
        self._timestamps[i] = tr.timestamp
        self._cells[i] = tr.cell

        self._ptr = (self._ptr + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def extend(self, transitions: Iterable[Transition]) -> None:
        for tr in transitions:
            self.add(tr)

    def _order(self) -> np.ndarray:
        """Storage indices from oldest to newest."""
        start = (self._ptr - self._size) % self.capacity
        return (start + np.arange(self._size)) % self.capacity

    def batch(self, indices: Optional[np.ndarray] = None) -> TransitionBatch:
        idx = self._order() if indices is None else indices
        return TransitionBatch(
            states=self._states[idx],
            actions=self._actions[idx],
            rewards=self._rewards[idx],
            next_states=self._next_states[idx],
        )

    def sample(self, batch_size: int, rng: np.random.Generator) -> TransitionBatch:
        """Uniform minibatch, without replacement within the batch."""
        if self._size == 0:
            raise ContractError("Cannot sample from an empty replay buffer.")
        if batch_size > self._size:
            raise ContractError(f"Batch of {batch_size} requested from a buffer holding {self._size}.")
        picks = rng.choice(self._size, size=batch_size, replace=False)
        return self.batch(self._order()[picks])

    def minibatches(self, batch_size: int, rng: np.random.Generator) -> Iterator[TransitionBatch]:
        """One pass over the stored transitions in random order. The last batch may be smaller."""
        order = self._order()[rng.permutation(self._size)]
        for i in range(0, self._size, batch_size):
            yield self.batch(order[i : i + batch_size])

    def transitions(self, cell: Optional[int] = None) -> List[Transition]:
        """Stored transitions, oldest first, optionally only those produced by ``cell``."""
        out = []
        for i in self._order():
            if cell is not None and self._cells[i] != cell:
                continue
            out.append(
                Transition(
                    state=self._states[i].copy(),
                    action=self._actions[i].copy(),
                    next_state=self._next_states[i].copy(),
                    reward=float(self._rewards[i]),
                    timestamp=int(self._timestamps[i]),
                    cell=int(self._cells[i]),
                ),
            )
        return out

    def count(self, cell: int) -> int:
        return int(np.sum(self._cells[self._order()] == cell))
