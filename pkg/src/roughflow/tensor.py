"""Degree-2 truncated tensor algebra over R^m.

Elements are group-like: the scalar slot is always 1 and is not stored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True, eq=False)
class Tensor2Element:
    """Element ``(1, level1, level2)`` of T^2(R^m)."""

    level1: np.ndarray
    level2: np.ndarray

    def __post_init__(self) -> None:
        l1 = np.array(self.level1, dtype=float)
        l2 = np.array(self.level2, dtype=float)
        if l1.ndim != 1 or l1.shape[0] < 1:
            raise InputError(f"level1 must be a non-empty vector, got shape {l1.shape}")
        m = l1.shape[0]
        if l2.shape != (m, m):
            raise InputError(f"level2 must have shape {(m, m)}, got {l2.shape}")
        if not (np.all(np.isfinite(l1)) and np.all(np.isfinite(l2))):
            raise InputError("tensor entries must be finite")
        l1.flags.writeable = False
        l2.flags.writeable = False
        object.__setattr__(self, "level1", l1)
        object.__setattr__(self, "level2", l2)

    @property
    def dim(self) -> int:
        return int(self.level1.shape[0])

    @classmethod
    def identity(cls, dim: int) -> Tensor2Element:
        return cls(np.zeros(dim), np.zeros((dim, dim)))

    def allclose(self, other: Tensor2Element, atol: float = 1e-12) -> bool:
        return bool(
            self.dim == other.dim
            and np.allclose(self.level1, other.level1, rtol=0.0, atol=atol)
            and np.allclose(self.level2, other.level2, rtol=0.0, atol=atol)
        )

    def __mul__(self, other: Tensor2Element) -> Tensor2Element:
        return tensor_mul(self, other)

    def __repr__(self) -> str:
        return f"Tensor2Element(level1={self.level1.tolist()}, level2={self.level2.tolist()})"


def tensor_mul(a: Tensor2Element, b: Tensor2Element) -> Tensor2Element:
    if a.dim != b.dim:
        raise InputError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return Tensor2Element(
        a.level1 + b.level1,
        a.level2 + b.level2 + np.outer(a.level1, b.level1),
    )


def tensor_inv(a: Tensor2Element) -> Tensor2Element:
    return Tensor2Element(-a.level1, -a.level2 + np.outer(a.level1, a.level1))


def level_norm(a: Tensor2Element, level: int) -> float:
    """Euclidean norm of the flattened level (Frobenius at level 2)."""
    if level == 1:
        return float(np.linalg.norm(a.level1))
    if level == 2:
        return float(np.linalg.norm(a.level2))
    raise InputError(f"level must be 1 or 2, got {level}")
