"""Grid-sampled rough paths of degree 2.

A path is stored through its running signatures ``X_{0,t_k}``.  Every interval
value is recovered from two running values through Chen's relation, so the
multiplicative property holds by construction up to floating point roundoff.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .tensor import Tensor2Element, tensor_inv, tensor_mul

P_MIN, P_MAX = 2.0, 3.0
Q_MAX = 4.0


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class GridRoughPath:
    """Running signatures of a rough path on the grid ``times``.

    ``level1[k]`` and ``level2[k]`` are the two tensor levels of ``X_{0,t_k}``.
    """

    times: np.ndarray
    level1: np.ndarray
    level2: np.ndarray

    def __post_init__(self) -> None:
        times = np.array(self.times, dtype=float)
        l1 = np.array(self.level1, dtype=float)
        l2 = np.array(self.level2, dtype=float)
        if times.ndim != 1 or times.shape[0] < 2:
            raise InputError("a rough path needs at least two grid points")
        if times[0] != 0.0:
            raise InputError(f"grids start at t=0, got t0={times[0]!r}")
        if not np.all(np.diff(times) > 0):
            bad = int(np.argmin(np.diff(times) > 0))
            raise InputError(f"grid times must be strictly increasing (fails at index {bad + 1})")
        if l1.ndim != 2 or l1.shape[0] != times.shape[0] or l1.shape[1] < 1:
            raise InputError(f"level1 must have shape (n_points, dim), got {l1.shape}")
        m = l1.shape[1]
        if l2.shape != (times.shape[0], m, m):
            raise InputError(f"level2 must have shape {(times.shape[0], m, m)}, got {l2.shape}")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(l1)) and np.all(np.isfinite(l2))):
            raise InputError("rough path entries must be finite")
        if np.any(l1[0] != 0.0) or np.any(l2[0] != 0.0):
            raise InputError("the running signature at t0 must be the identity")
        object.__setattr__(self, "times", _freeze(times))
        object.__setattr__(self, "level1", _freeze(l1))
        object.__setattr__(self, "level2", _freeze(l2))

    @property
    def dim(self) -> int:
        return int(self.level1.shape[1])

    @property
    def n_points(self) -> int:
        return int(self.times.shape[0])

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def sig(self, k: int) -> Tensor2Element:
        return Tensor2Element(self.level1[k], self.level2[k])

    def increment(self, i: int, j: int) -> Tensor2Element:
        n = self.n_points
        if not (0 <= i <= j < n):
            raise IndexError(f"need 0 <= i <= j < {n}, got i={i}, j={j}")
        return tensor_mul(tensor_inv(self.sig(i)), self.sig(j))

    def increments_to(self, j: int, start: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Both levels of ``X_{t_i,t_j}`` for ``start <= i < j``, stacked along axis 0."""
        a1 = self.level1[start:j]
        a2 = self.level2[start:j]
        d1 = self.level1[j] - a1
        d2 = self.level2[j] - a2 - a1[:, :, None] * d1[:, None, :]
        return d1, d2

    def increments_from(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Both levels of ``X_{t_i,t_k}`` for ``k > i``."""
        b1 = self.level1[i + 1 :]
        d1 = b1 - self.level1[i]
        d2 = self.level2[i + 1 :] - self.level2[i] - self.level1[i][None, :, None] * d1[:, None, :]
        return d1, d2

    def same_grid(self, other: GridRoughPath) -> bool:
        return self.n_points == other.n_points and bool(np.array_equal(self.times, other.times))

    def equals(self, other: GridRoughPath) -> bool:
        return (
            self.same_grid(other)
            and self.dim == other.dim
            and bool(np.array_equal(self.level1, other.level1))
            and bool(np.array_equal(self.level2, other.level2))
        )

    def with_times(self, times: np.ndarray) -> GridRoughPath:
        return GridRoughPath(times, self.level1, self.level2)


def trivial_path(times: np.ndarray, dim: int) -> GridRoughPath:
    n = len(times)
    return GridRoughPath(times, np.zeros((n, dim)), np.zeros((n, dim, dim)))


def from_increments(times: np.ndarray, inc1: np.ndarray, inc2: np.ndarray) -> GridRoughPath:
    """Chain per-segment elements ``(inc1[k], inc2[k])`` left to right."""
    inc1 = np.asarray(inc1, dtype=float)
    inc2 = np.asarray(inc2, dtype=float)
    m = inc1.shape[1]
    l1 = np.zeros((inc1.shape[0] + 1, m))
    l1[1:] = np.cumsum(inc1, axis=0)
    l2 = np.zeros((inc1.shape[0] + 1, m, m))
    l2[1:] = np.cumsum(inc2 + l1[:-1, :, None] * inc1[:, None, :], axis=0)
    return GridRoughPath(times, l1, l2)


def canonical_lift(times: Sequence[float] | np.ndarray, points: np.ndarray) -> GridRoughPath:
    """Exact signature of the piecewise-linear interpolation of ``points``.

    Times are shifted so that the grid starts at zero.
    """
    t = np.asarray(times, dtype=float)
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if t.ndim != 1 or t.shape[0] < 2:
        raise InputError("canonical_lift needs at least two points")
    if x.shape[0] != t.shape[0]:
        raise InputError(f"{t.shape[0]} times but {x.shape[0]} points")
    if not np.all(np.diff(t) > 0):
        bad = int(np.argmin(np.diff(t) > 0))
        raise InputError(f"times must be strictly increasing (fails at index {bad + 1})")
    delta = np.diff(x, axis=0)
    return from_increments(t - t[0], delta, 0.5 * delta[:, :, None] * delta[:, None, :])


def levy_area(X: GridRoughPath, i: int = 0, j: int = 1, k: int = -1) -> float:
    """Antisymmetric part ``(X^{2,ij} - X^{2,ji}) / 2`` of ``X_{0,t_k}``."""
    a = X.level2[k]
    return float(0.5 * (a[i, j] - a[j, i]))


def scalar_mul(lam: float, X: GridRoughPath) -> GridRoughPath:
    return GridRoughPath(X.times, lam * X.level1, (lam * lam) * X.level2)


@dataclass(frozen=True, eq=False)
class PairRoughPath:
    """A rough path over ``R^d + R^d`` with its block decomposition."""

    path: GridRoughPath

    def __post_init__(self) -> None:
        if self.path.dim % 2:
            raise InputError(f"a pair path needs even dimension, got {self.path.dim}")

    @property
    def d(self) -> int:
        return self.path.dim // 2

    @property
    def times(self) -> np.ndarray:
        return self.path.times

    @property
    def n_points(self) -> int:
        return self.path.n_points

    def pi1(self) -> GridRoughPath:
        d = self.d
        return GridRoughPath(self.path.times, self.path.level1[:, :d], self.path.level2[:, :d, :d])

    def pi2(self) -> GridRoughPath:
        d = self.d
        return GridRoughPath(self.path.times, self.path.level1[:, d:], self.path.level2[:, d:, d:])

    def cross12(self) -> np.ndarray:
        """Running values of the (1,2) level-2 block."""
        return self.path.level2[:, : self.d, self.d :]

    def cross21(self) -> np.ndarray:
        return self.path.level2[:, self.d :, : self.d]

    def cross_sum_increments_to(self, j: int) -> np.ndarray:
        """``pi_{12}(Z)_{t_i,t_j} + pi_{21}(Z)_{t_i,t_j}`` for ``i < j``."""
        d = self.d
        _, z2 = self.path.increments_to(j)
        return z2[:, :d, d:] + z2[:, d:, :d]


def pair_path(
    X: GridRoughPath,
    Y: GridRoughPath,
    cross12: np.ndarray,
    cross21: np.ndarray,
) -> PairRoughPath:
    """Assemble a pair path from two paths and running values of the cross blocks."""
    if not X.same_grid(Y) or X.dim != Y.dim:
        raise InputError("pair components must share grid and dimension")
    n, d = X.n_points, X.dim
    c12 = np.asarray(cross12, dtype=float)
    c21 = np.asarray(cross21, dtype=float)
    if c12.shape != (n, d, d) or c21.shape != (n, d, d):
        raise InputError(f"cross blocks must have shape {(n, d, d)}")
    l2 = np.zeros((n, 2 * d, 2 * d))
    l2[:, :d, :d] = X.level2
    l2[:, :d, d:] = c12
    l2[:, d:, :d] = c21
    l2[:, d:, d:] = Y.level2
    return PairRoughPath(GridRoughPath(X.times, np.concatenate([X.level1, Y.level1], axis=1), l2))


@dataclass(frozen=True, eq=False)
class Phi:
    """Additive level-2 perturbation stored as ``values[k] = phi_{0,t_k}``."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.ndim != 3 or v.shape[1] != v.shape[2]:
            raise InputError(f"phi values must have shape (n_points, d, d), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InputError("phi entries must be finite")
        if np.any(v[0] != 0.0):
            raise InputError("phi must vanish at the first grid point")
        object.__setattr__(self, "values", _freeze(v))

    @property
    def d(self) -> int:
        return int(self.values.shape[1])

    @property
    def n_points(self) -> int:
        return int(self.values.shape[0])

    @classmethod
    def zeros(cls, n_points: int, d: int) -> Phi:
        return cls(np.zeros((n_points, d, d)))

    @classmethod
    def from_pair_values(cls, table: np.ndarray, tol: float = 1e-10) -> Phi:
        """Build from interval values ``table[s, t]``, checking additivity.

        Raises if ``table[s, u]`` differs from ``table[s, t] + table[t, u]`` by more
        than ``tol`` (relative to the table's scale) for some grid triple.
        """
        table = np.asarray(table, dtype=float)
        vals = table[0].copy()
        vals[0] = 0.0
        scale = max(1.0, float(np.max(np.abs(table))))
        n = table.shape[0]
        for s in range(n):
            pred = vals[s + 1 :] - vals[s]
            err = np.abs(table[s, s + 1 :] - pred)
            if err.size and float(err.max()) > tol * scale:
                t = s + 1 + int(np.unravel_index(np.argmax(err), err.shape)[0])
                raise InputError(
                    f"interval values are not additive: residual {float(err.max()):.3e} on ({s}, {t})"
                )
        return cls(vals)

    def increments_to(self, j: int) -> np.ndarray:
        return self.values[j] - self.values[:j]

    def variation(self, exponent: float) -> float:
        return variation_norm(lambda j: _norms(self.increments_to(j)), self.n_points, exponent)

    def __add__(self, other: Phi) -> Phi:
        return Phi(self.values + other.values)

    def scaled(self, lam: float) -> Phi:
        return Phi(lam * self.values)


def _norms(arr: np.ndarray) -> np.ndarray:
    """Euclidean norm of each slice along axis 0."""
    return np.sqrt(np.sum(arr.reshape(arr.shape[0], -1) ** 2, axis=1))


def prefix_sup_sums(norms_to: Callable[[int], np.ndarray], n_points: int, exponent: float) -> np.ndarray:
    """``best[j]``: sup over partitions of the grid prefix ``[t_0, t_j]`` of sum ``norm**exponent``.

    ``norms_to(j)`` gives the interval norms for ``(t_i, t_j)``, ``i < j``.
    """
    best = np.zeros(n_points)
    for j in range(1, n_points):
        best[j] = np.max(best[:j] + norms_to(j) ** exponent)
    return best


def variation_norm(norms_to: Callable[[int], np.ndarray], n_points: int, exponent: float) -> float:
    if exponent <= 0:
        raise InputError(f"variation exponent must be positive, got {exponent}")
    return float(prefix_sup_sums(norms_to, n_points, exponent)[-1] ** (1.0 / exponent))


def _check_level(level: int) -> None:
    if level not in (1, 2):
        raise InputError(f"level must be 1 or 2, got {level}")


def _check_p(p: float) -> None:
    if not (P_MIN < p < P_MAX):
        raise InputError(f"p must lie in the open interval (2, 3), got {p}")


def _check_metric_exponent(p: float) -> None:
    if not (P_MIN < p <= Q_MAX):
        raise InputError(f"metric exponent must lie in (2, 4], got {p}")


def level_norms_to(X: GridRoughPath, j: int, level: int) -> np.ndarray:
    return _norms(X.increments_to(j)[level - 1])


def p_variation(X: GridRoughPath, p: float, level: int) -> float:
    """Grid p-variation of level ``level`` with exponent ``p / level``."""
    _check_p(p)
    _check_level(level)
    return variation_norm(lambda j: level_norms_to(X, j, level), X.n_points, p / level)


def _require_aligned(X: GridRoughPath, Y: GridRoughPath) -> None:
    if X.dim != Y.dim:
        raise InputError(f"dimension mismatch: {X.dim} vs {Y.dim}")
    if not X.same_grid(Y):
        raise InputError("paths live on different grids; resample first")


def level_distance(X: GridRoughPath, Y: GridRoughPath, p: float, level: int) -> float:
    _require_aligned(X, Y)

    def norms_to(j: int) -> np.ndarray:
        return _norms(X.increments_to(j)[level - 1] - Y.increments_to(j)[level - 1])

    return variation_norm(norms_to, X.n_points, p / level)


def dist_p(X: GridRoughPath, Y: GridRoughPath, p: float) -> float:
    """Inhomogeneous p-variation distance over grid partitions."""
    _check_metric_exponent(p)
    return max(level_distance(X, Y, p, 1), level_distance(X, Y, p, 2))


def q_bound_constant(X: GridRoughPath, Y: GridRoughPath, p: float, q: float) -> float:
    """Constant ``C`` in ``d_q(X, Y) <= C d_p(X, Y)^{p/q}`` built from sup-distances from 0."""
    _check_p(p)
    if not (p < q <= Q_MAX):
        raise InputError(f"need p < q <= 4, got p={p}, q={q}")
    _require_aligned(X, Y)
    e = (q - p) / q
    gap1 = float(np.max(_norms(X.level1 - Y.level1)))
    gap2 = float(np.max(_norms(X.level2 - Y.level2)))
    size = float(np.max(_norms(X.level1))) + float(np.max(_norms(Y.level1)))
    return max((2.0 * gap1) ** e, (2.0 * gap2 * (1.0 + 2.0 * size)) ** e)


def control_prefix(X: GridRoughPath, p: float) -> np.ndarray:
    """``omega(t_k)``: summed sup-sums of both levels over ``[0, t_k]``."""
    _check_p(p)
    total = np.zeros(X.n_points)
    for level in (1, 2):
        total += prefix_sup_sums(lambda j, lv=level: level_norms_to(X, j, lv), X.n_points, p / level)
    return total


def reparameterize(X: GridRoughPath, p: float) -> tuple[GridRoughPath, np.ndarray]:
    """Move grid times to ``omega(t) T / omega(T)``; signatures are untouched."""
    omega = control_prefix(X, p)
    steps = np.diff(omega)
    if np.any(steps <= 0):
        k = int(np.argmax(steps <= 0))
        raise InputError(
            f"control is not strictly increasing: path is constant on grid interval {k} "
            f"[{X.times[k]!r}, {X.times[k + 1]!r}]"
        )
    T = X.horizon
    tau = omega * (T / omega[-1])
    tau[0] = 0.0
    tau[-1] = T
    return X.with_times(tau), tau


def rough_sum(Z: PairRoughPath) -> GridRoughPath:
    d = Z.d
    l1 = Z.path.level1[:, :d] + Z.path.level1[:, d:]
    l2 = Z.path.level2[:, :d, :d] + Z.path.level2[:, d:, d:] + Z.cross12() + Z.cross21()
    return GridRoughPath(Z.times, l1, l2)


def chen_residual(X: GridRoughPath, max_triples: int | None = None, seed: int = 0) -> float:
    """Largest entrywise defect of ``X_{s,t} X_{t,u} = X_{s,u}`` over grid triples.

    All triples are checked unless ``max_triples`` is given and smaller than
    their number, in which case a seeded random subset is used.
    """
    n = X.n_points
    total = n * (n - 1) * (n - 2) // 6
    worst = 0.0
    if max_triples is None or total <= max_triples:
        for j in range(1, n - 1):
            a1, a2 = X.increments_to(j)
            b1, b2 = X.increments_from(j)
            left1 = X.level1[:j, None, :, None]
            c2 = (
                X.level2[None, j + 1 :]
                - X.level2[:j, None]
                - left1 * (X.level1[None, j + 1 :, None, :] - X.level1[:j, None, None, :])
            )
            prod = a2[:, None] + b2[None, :] + a1[:, None, :, None] * b1[None, :, None, :]
            worst = max(worst, float(np.max(np.abs(prod - c2))))
        return worst
    rng = np.random.default_rng(seed)
    idx = np.sort(np.stack([rng.choice(n, size=3, replace=False) for _ in range(max_triples)]), axis=1)
    for i, j, k in idx:
        lhs = tensor_mul(X.increment(i, j), X.increment(j, k))
        rhs = X.increment(i, k)
        worst = max(
            worst,
            float(np.max(np.abs(lhs.level1 - rhs.level1))),
            float(np.max(np.abs(lhs.level2 - rhs.level2))),
        )
    return worst


def resample(X: GridRoughPath, new_times: Sequence[float] | np.ndarray) -> GridRoughPath:
    """Evaluate running signatures at ``new_times`` by splitting grid segments.

    A segment element ``(a, B)`` is split at fraction ``theta`` into
    ``(theta a, theta^2 a a^T / 2 + theta R)`` and its complement, where
    ``R = B - a a^T / 2``.  Level 1 is linear inside segments and the two pieces
    multiply back to the original element.
    """
    t = np.asarray(new_times, dtype=float)
    if t.ndim != 1 or t.shape[0] < 2 or t[0] != 0.0 or t[-1] > X.horizon or np.any(np.diff(t) <= 0):
        raise InputError("new grid must be strictly increasing, start at 0 and stay within the horizon")
    l1 = np.zeros((t.shape[0], X.dim))
    l2 = np.zeros((t.shape[0], X.dim, X.dim))
    seg = np.clip(np.searchsorted(X.times, t, side="right") - 1, 0, X.n_points - 2)
    for out, (tk, k) in enumerate(zip(t, seg)):
        theta = (tk - X.times[k]) / (X.times[k + 1] - X.times[k])
        g = X.increment(int(k), int(k) + 1)
        a = g.level1
        rest = g.level2 - 0.5 * np.outer(a, a)
        piece = Tensor2Element(theta * a, 0.5 * theta * theta * np.outer(a, a) + theta * rest)
        s = tensor_mul(X.sig(int(k)), piece)
        l1[out] = s.level1
        l2[out] = s.level2
    l1[0] = 0.0
    l2[0] = 0.0
    return GridRoughPath(t, l1, l2)
