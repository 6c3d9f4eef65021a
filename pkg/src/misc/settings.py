import os
from typing import Literal, Mapping, Optional

from pydantic import BaseModel, ConfigDict, ValidationError

from .errors import ConfigurationError

ENV_PREFIX = "DIRP_"


class DirpSettings(BaseModel):
    """Process-wide defaults for the command line, overridable through ``DIRP_*`` environment variables."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    log_level: Literal["debug", "info", "warning", "error"] = "info"
    output_dir: str = "runs"
    progress: bool = True

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "DirpSettings":
        environ = os.environ if environ is None else environ
        values = {}
        for name in cls.model_fields:
            key = ENV_PREFIX + name.upper()
            if key in environ:
                values[name] = environ[key].lower() if name == "log_level" else environ[key]
        try:
            return cls.model_validate(values)
        except ValidationError as e:
            raise ConfigurationError(f"Invalid {ENV_PREFIX}* environment settings: {e}") from e
