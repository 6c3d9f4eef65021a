from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
import structlog

from ..approx.activations import Activation, decoupled_softmax
from ..approx.adam import AdamState, adam_step
from ..approx.mlp import ParamSet
from ..io.checkpoint import load_checkpoint, network_from_document, save_checkpoint
from ..misc.errors import CheckpointError, ContractError
from ..misc.simplexops import renormalize
from .hyper import Td3Hyper

LOG = structlog.get_logger(__name__)

CURRENT_NETWORK_NAMES = ("actor", "critic1", "critic2")
NETWORK_NAMES = CURRENT_NETWORK_NAMES + ("target_actor", "target_critic1", "target_critic2")


@dataclass
class TransitionBatch:
    """Stacked transitions: states (B, S), actions (B, A), rewards (B,), next_states (B, S)."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray

    def __len__(self) -> int:
        return self.rewards.shape[0]


@dataclass
class TargetRecord:
    """Last target evaluation, kept for inspection."""

    q1: np.ndarray
    q2: np.ndarray
    y: np.ndarray


class Td3Agent:
    """Twin critics, a softmax actor and their target copies, each with its own Adam state."""

    def __init__(
        self,
        state_dim: int,
        action_dim: int,
        hyper: Optional[Td3Hyper] = None,
        groups: int = 1,
        seed: int = 0,
    ):
        self.hyper = hyper if hyper is not None else Td3Hyper()
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.groups = groups
        self.rng = np.random.default_rng(seed)

        h = self.hyper
        self.actor = ParamSet.initialize(
            [state_dim, *h.actor_hidden, action_dim],
            self.rng,
            output_activation=Activation.DECOUPLED_SOFTMAX,
            groups=groups,
        )
        self.critic1 = ParamSet.initialize([state_dim + action_dim, *h.critic_hidden, 1], self.rng)
        self.critic2 = ParamSet.initialize([state_dim + action_dim, *h.critic_hidden, 1], self.rng)

        self.target_actor = self.actor.copy()
        self.target_critic1 = self.critic1.copy()
        self.target_critic2 = self.critic2.copy()

        self.reset_optimizers()

        self.train_steps = 0
        self.actor_updates = 0
        self.last_target: Optional[TargetRecord] = None

    def reset_optimizers(self) -> None:
        self.actor_opt = AdamState.for_network(self.actor, self.hyper.actor_lr)
        self.critic1_opt = AdamState.for_network(self.critic1, self.hyper.critic_lr)
        self.critic2_opt = AdamState.for_network(self.critic2, self.hyper.critic_lr)

    # Acting

    def act(self, state: np.ndarray, logit_noise: float = 0.0) -> np.ndarray:
        """Actor output. With ``logit_noise`` > 0, Gaussian noise is added to the logits before the softmax."""
        out, tape = self.actor.forward(state)
        if logit_noise <= 0:
            return out
        z = tape.pre[-1] if tape.batched else tape.pre[-1][0]
        return decoupled_softmax(z + self.rng.normal(0.0, logit_noise, size=z.shape), self.groups)

    def target_action(self, next_states: np.ndarray) -> np.ndarray:
        """Smoothed target action: clipped noise, clipped to the action bounds, projected back on the simplex."""
        h = self.hyper
        a = self.target_actor(next_states)
        if h.policy_noise == 0:
            return a
        noise = np.clip(self.rng.normal(0.0, h.policy_noise, size=a.shape), -h.noise_clip, h.noise_clip)
        a = np.clip(a + noise, h.action_low, h.action_high)
        return renormalize(a, self.groups)

    def q_values(self, states: np.ndarray, actions: np.ndarray, target: bool = False) -> Tuple[np.ndarray, np.ndarray]:
        x = np.concatenate([np.atleast_2d(states), np.atleast_2d(actions)], axis=1)
        c1, c2 = (self.target_critic1, self.target_critic2) if target else (self.critic1, self.critic2)
        return c1(x)[:, 0], c2(x)[:, 0]

    def td_target(self, rewards: np.ndarray, next_states: np.ndarray) -> np.ndarray:
        next_states = np.atleast_2d(next_states)
        rewards = np.atleast_1d(np.asarray(rewards, dtype=np.float64))
        if not np.all(np.isfinite(rewards)):
            raise ContractError("Nonfinite reward in TD target.")
        a = self.target_action(next_states)
        q1, q2 = self.q_values(next_states, a, target=True)
        y = rewards + self.hyper.gamma * np.minimum(q1, q2)
        self.last_target = TargetRecord(q1=q1, q2=q2, y=y)
        return y

    # Learning

    def update_critics(self, batch: TransitionBatch) -> float:
        """One Adam step for each critic on its squared TD error. Returns the pre-update mean loss."""
        if len(batch) == 0:
            raise ContractError("Cannot update critics on an empty batch.")
        y = self.td_target(batch.rewards, batch.next_states)
        x = np.concatenate([batch.states, batch.actions], axis=1)
        B = len(batch)

        passes = []
        losses = []
        for critic in (self.critic1, self.critic2):
            q, tape = critic.forward(x)
            err = q[:, 0] - y
            losses.append(float(np.mean(err**2)))
            passes.append((critic, tape, err))

        loss = float(np.mean(losses))
        if not np.isfinite(loss):
            LOG.warning("nonfinite critic loss, skipping update", loss=loss, step=self.train_steps)
            return loss

        for (critic, tape, err), opt in zip(passes, (self.critic1_opt, self.critic2_opt)):
            grad, _ = critic.backward(tape, (2.0 / B) * err[:, None])
            adam_step(critic, grad, opt)
        return loss

    def update_actor_and_targets(self, batch: TransitionBatch, step_index: int) -> Optional[float]:
        """Delayed actor ascent on Q1 followed by soft target updates. No-op off the policy delay."""
        if step_index % self.hyper.policy_delay != 0:
            return None

        B = len(batch)
        a, actor_tape = self.actor.forward(batch.states)
        q, critic_tape = self.critic1.forward(np.concatenate([batch.states, a], axis=1))
        loss = -float(np.mean(q))

        _, dx = self.critic1.backward(critic_tape, np.full((B, 1), -1.0 / B))
        grad, _ = self.actor.backward(actor_tape, dx[:, self.state_dim :])
        adam_step(self.actor, grad, self.actor_opt)
        self.actor_updates += 1

        self.soft_update()
        return loss

    def soft_update(self, tau: Optional[float] = None) -> None:
        tau = self.hyper.tau if tau is None else tau
        self.target_actor.soft_update_from(self.actor, tau)
        self.target_critic1.soft_update_from(self.critic1, tau)
        self.target_critic2.soft_update_from(self.critic2, tau)

    def train_step(self, batch: TransitionBatch) -> Tuple[float, Optional[float]]:
        self.train_steps += 1
        critic_loss = self.update_critics(batch)
        actor_loss = None
        if np.isfinite(critic_loss):
            actor_loss = self.update_actor_and_targets(batch, self.train_steps)
        return critic_loss, actor_loss

    # Persistence and transfer

    def networks(self) -> Dict[str, ParamSet]:
        return {name: getattr(self, name) for name in NETWORK_NAMES}

    def optimizers(self) -> Dict[str, AdamState]:
        return {"actor": self.actor_opt, "critic1": self.critic1_opt, "critic2": self.critic2_opt}

    def load_networks(self, networks: Dict[str, ParamSet]) -> None:
        """Copy parameters in. Missing target networks are initialized from the transferred current ones."""
        for name in CURRENT_NETWORK_NAMES:
            if name not in networks:
                raise CheckpointError(f"Network '{name}' missing from transferred parameters.")
        for name in NETWORK_NAMES:
            source = networks.get(name, networks[name.replace("target_", "")])
            try:
                getattr(self, name).copy_from(source)
            except ValueError as e:
                raise CheckpointError(f"Cannot load '{name}': {e}") from e
        self.reset_optimizers()

    def sync_targets(self) -> None:
        """Targets become exact copies of the current networks."""
        for name in CURRENT_NETWORK_NAMES:
            getattr(self, "target_" + name).copy_from(getattr(self, name))

    def save(self, path: Union[str, Path], metadata: Optional[dict] = None) -> Path:
        meta = {"state_dim": self.state_dim, "action_dim": self.action_dim, "groups": self.groups}
        meta.update(metadata or {})
        return save_checkpoint(
            path,
            self.networks(),
            self.optimizers(),
            hyper=self.hyper.model_dump(),
            metadata=meta,
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Td3Agent":
        doc = load_checkpoint(path)
        hyper = Td3Hyper(**doc.hyper)
        meta = doc.metadata
        if "state_dim" not in meta or "action_dim" not in meta:
            raise CheckpointError(f"{path}: not an agent checkpoint (no state or action dimension).")
        agent = cls(int(meta["state_dim"]), int(meta["action_dim"]), hyper, groups=int(meta.get("groups", 1)))
        loaded = {name: network_from_document(nd) for name, nd in doc.networks.items()}
        agent.load_networks({name: net for name, (net, _) in loaded.items()})
        for name, opt in agent.optimizers().items():
            saved = loaded.get(name, (None, None))[1]
            if saved is not None:
                opt.m, opt.v, opt.t = saved.m, saved.v, saved.t
        return agent
