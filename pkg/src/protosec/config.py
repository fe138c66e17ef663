"""Oracle defaults, optionally overridden from the environment or a ``.env`` file."""

from __future__ import annotations

import os

from pydantic import BaseModel, Field, ValidationError

from .errors import ConfigError

try:
    # local runs: pick up a .env next to the working directory if present
    from dotenv import load_dotenv
except ImportError:  # pragma: no cover
    load_dotenv = None

DEFAULT_SEED = 1729

_ENV_FIELDS = {
    "seed": "PROTOSEC_SEED",
    "sessions": "PROTOSEC_SESSIONS",
    "trials": "PROTOSEC_TRIALS",
    "depth": "PROTOSEC_DEPTH",
    "node_cap": "PROTOSEC_NODE_CAP",
}


class Settings(BaseModel):
    seed: int = DEFAULT_SEED
    sessions: int = Field(default=2, ge=0)
    trials: int = Field(default=1000, ge=0)
    depth: int = Field(default=2, ge=1)
    node_cap: int = Field(default=200_000, ge=1)
    max_messages: int = Field(default=3, ge=1)
    max_candidates: int = Field(default=48, ge=1)

    @classmethod
    def from_env(cls, **overrides: int | None) -> "Settings":
        """Build settings from ``PROTOSEC_*`` variables, then ``overrides`` that are not None.

        Raises ``ConfigError`` naming the variable or option that failed validation.
        """
        if load_dotenv is not None:
            load_dotenv()
        values: dict[str, object] = {}
        origin: dict[str, str] = {}
        for name, variable in _ENV_FIELDS.items():
            raw = os.environ.get(variable)
            if raw:
                values[name] = raw
                origin[name] = variable
        for name, value in overrides.items():
            if value is not None:
                values[name] = value
                origin[name] = f"--{name.replace('_', '-')}"
        try:
            return cls.model_validate(values)
        except ValidationError as exc:
            problems = []
            for error in exc.errors():
                name = str(error["loc"][0])
                problems.append(f"{origin.get(name, name)}: {error['msg']}")
            raise ConfigError("; ".join(problems)) from exc
