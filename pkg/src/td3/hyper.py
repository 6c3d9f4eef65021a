from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Td3Hyper(BaseModel):
    """TD3 constants. Noise magnitudes are in action units (fractions of a cell's resources)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    gamma: float = Field(default=0.1, ge=0.0, le=1.0)
    tau: float = Field(default=0.005, gt=0.0, le=1.0)
    policy_noise: float = Field(default=0.1, ge=0.0)
    noise_clip: float = Field(default=0.25, gt=0.0)
    policy_delay: int = Field(default=2, ge=1)
    batch_size: int = Field(default=32, ge=1)
    actor_lr: float = Field(default=5e-4, gt=0.0)
    critic_lr: float = Field(default=1e-3, gt=0.0)
    action_low: float = 0.0
    action_high: float = 1.0
    exploration_noise: float = Field(default=0.2, ge=0.0)
    actor_hidden: Tuple[int, ...] = (48, 24)
    critic_hidden: Tuple[int, ...] = (64, 24)

    @model_validator(mode="after")
    def _bounds(self) -> "Td3Hyper":
        if self.action_low >= self.action_high:
            raise ValueError("action_low must be below action_high")
        if any(h <= 0 for h in self.actor_hidden + self.critic_hidden):
            raise ValueError("hidden layer widths must be positive")
        return self

    @classmethod
    def centralized(cls, **overrides) -> "Td3Hyper":
        """Wider networks for the single agent controlling every cell."""
        return cls(**{"actor_hidden": (384, 192, 64), "critic_hidden": (324, 144, 64), **overrides})
