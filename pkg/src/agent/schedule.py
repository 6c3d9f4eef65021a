from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..misc.errors import ContractError


class Phase(str, Enum):
    EXPLORE = "explore"
    TRAIN = "train"
    EVAL = "eval"


class PhaseSchedule(BaseModel):
    """Consecutive exploration, training and evaluation periods starting at timestamp ``start``.

    Exploration follows the traffic-aware heuristic with a probability ramping from ``heuristic_start`` to
    ``heuristic_end`` over the exploration period, and a uniform random partition otherwise. Training is
    epsilon-greedy with multiplicative decay.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    exploration: int = Field(default=100, ge=0)
    training: int = Field(default=5000, ge=0)
    evaluation: int = Field(default=500, ge=0)
    start: int = Field(default=0, ge=0)
    epsilon0: float = Field(default=1.0, ge=0.0, le=1.0)
    decay: float = Field(default=0.999, ge=0.0, le=1.0)
    heuristic_start: float = Field(default=0.5, ge=0.0, le=1.0)
    heuristic_end: float = Field(default=0.9, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _nonempty(self) -> "PhaseSchedule":
        if self.horizon == 0:
            raise ValueError("schedule has no timestamps")
        return self

    @property
    def horizon(self) -> int:
        return self.exploration + self.training + self.evaluation

    @property
    def end(self) -> int:
        return self.start + self.horizon

    def phase(self, t: int) -> Phase:
        r = t - self.start
        if r < 0 or r >= self.horizon:
            raise ContractError(f"Timestamp {t} outside of the schedule [{self.start}, {self.end}).")
        if r < self.exploration:
            return Phase.EXPLORE
        if r < self.exploration + self.training:
            return Phase.TRAIN
        return Phase.EVAL

    def heuristic_probability(self, t: int) -> float:
        r = t - self.start
        if r >= self.exploration:
            return self.heuristic_end
        if self.exploration <= 1:
            return self.heuristic_start
        frac = r / (self.exploration - 1)
        return self.heuristic_start + (self.heuristic_end - self.heuristic_start) * frac

    def shifted(self, start: int) -> "PhaseSchedule":
        return self.model_copy(update={"start": start})

    def without_exploration(self) -> "PhaseSchedule":
        return self.model_copy(update={"exploration": 0})
