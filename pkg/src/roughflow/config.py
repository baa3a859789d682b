"""Run configuration: JSON file values overridden by command-line flags."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .errors import InputError


@dataclass(frozen=True)
class RunConfig:
    p: float = 2.5
    q: float | None = None
    chen_tol: float = 1e-12
    equiv_tol: float = 1e-10
    cauchy_tol: float = 1e-10
    depth: int = 10
    c0: float = 0.0
    schedule: tuple[float, ...] = (0.1, 0.05, 0.025, 0.0125)
    r: float = 1.0
    horizon: float = 1.0
    safety: float = 1.5
    seed: int = 0
    inputs: tuple[str, ...] = ()
    output_dir: str = "."

    def __post_init__(self) -> None:
        if self.q is None:
            object.__setattr__(self, "q", self.p + 0.5)
        object.__setattr__(self, "schedule", tuple(float(e) for e in self.schedule))
        object.__setattr__(self, "inputs", tuple(str(s) for s in self.inputs))
        self.validate()

    def validate(self) -> None:
        if not (2.0 < self.p < self.q <= 4.0):
            raise InputError(f"need 2 < p < q <= 4, got p={self.p}, q={self.q}")
        for name in ("chen_tol", "equiv_tol", "cauchy_tol", "r", "horizon", "safety"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        if self.depth < 1:
            raise InputError("depth must be at least 1")
        if not self.schedule or any(e <= 0 for e in self.schedule):
            raise InputError("schedule must be a non-empty list of positive values")
        if any(b >= a for a, b in zip(self.schedule, self.schedule[1:])):
            raise InputError("schedule must be strictly decreasing")

    @classmethod
    def from_file(cls, path: str | Path) -> RunConfig:
        return cls.from_sources(path, {})

    @classmethod
    def from_sources(cls, path: str | Path | None, overrides: dict[str, Any]) -> RunConfig:
        """File values first, then every override that is not ``None``."""
        values: dict[str, Any] = {}
        if path is not None:
            try:
                loaded = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise InputError(f"cannot read config {path}: {exc}") from exc
            if not isinstance(loaded, dict):
                raise InputError("config file must hold a JSON object")
            values.update(loaded)
        values.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise InputError(f"unknown config fields: {', '.join(unknown)}")
        try:
            return cls(**values)
        except TypeError as exc:
            raise InputError(f"bad config value: {exc}") from exc

    def with_overrides(self, **kwargs: Any) -> RunConfig:
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["schedule"] = list(self.schedule)
        out["inputs"] = list(self.inputs)
        return out
