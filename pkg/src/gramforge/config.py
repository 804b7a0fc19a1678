"""Shared numerical tolerances.

Every module reads its defaults from :data:`DEFAULT`. The CLI builds a
:class:`RunConfig` from environment variables (``GRAMFORGE_TOL_RANK`` and
friends) and then command-line flags, flags winning.
"""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass

ENV_PREFIX = "GRAMFORGE_"


@dataclass(frozen=True)
class RunConfig:
    tol_rank: float = 1e-8
    tol_feas: float = 1e-7
    tol_gap: float = 1e-8
    tol_comp: float = 1e-6
    seed: int = 0
    max_iters: int = 100
    regularize_eps: float = 1e-6

    def __post_init__(self):
        for name in ("tol_rank", "tol_feas", "tol_gap", "tol_comp", "regularize_eps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")

    @classmethod
    def from_env(cls, environ=None, **overrides) -> "RunConfig":
        """Defaults, then ``GRAMFORGE_*`` variables, then non-None overrides."""
        environ = os.environ if environ is None else environ
        values = {}
        for field in dataclasses.fields(cls):
            key = ENV_PREFIX + field.name.upper()
            if key in environ:
                values[field.name] = int(environ[key]) if field.type in ("int", int) else float(environ[key])
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


DEFAULT = RunConfig()
