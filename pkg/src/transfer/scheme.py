from enum import Enum

from pydantic import BaseModel, ConfigDict, Field


class TransferScheme(str, Enum):
    GEN = "gen"
    SPEC = "spec"
    SPEC_INSTANCE = "spec-instance"
    SPEC_MODEL = "spec-model"
    TL_DIRP = "tl-dirp"


DEFAULT_OFFLINE_EPOCHS = 3


class TransferOptions(BaseModel):
    """What a specialist receives from the generalist and how it continues.

    With every flag off and no generalist phase the pipeline reduces to plain DIRP.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    transfer_models: bool = False
    transfer_instances: bool = False
    offline_epochs: int = Field(default=0, ge=0)
    skip_exploration: bool = False
    frozen: bool = False

    @classmethod
    def for_scheme(cls, scheme: TransferScheme, offline_epochs: int = DEFAULT_OFFLINE_EPOCHS) -> "TransferOptions":
        scheme = TransferScheme(scheme)
        if scheme == TransferScheme.GEN:
            return cls(transfer_models=True, frozen=True)
        if scheme == TransferScheme.SPEC_MODEL:
            return cls(transfer_models=True)
        if scheme == TransferScheme.SPEC_INSTANCE:
            return cls(transfer_instances=True, skip_exploration=True)
        if scheme == TransferScheme.SPEC:
            return cls(transfer_models=True, transfer_instances=True, skip_exploration=True)
        return cls(
            transfer_models=True,
            transfer_instances=True,
            offline_epochs=offline_epochs,
            skip_exploration=True,
        )

    @property
    def transfers_anything(self) -> bool:
        return self.transfer_models or self.transfer_instances
