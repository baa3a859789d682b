"""Tangent vectors ``[Z, phi]`` at a base rough path.

A representative pairs a rough path ``Z`` over ``R^d + R^d`` whose first
component is the base path with an additive perturbation ``phi`` of level 2.
Two representatives are equivalent when their variational curves have the
same derivative at zero: same direction increments, and same value of the
coupling ``pi_12(Z) + pi_21(Z) + phi`` on every grid interval.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .roughpath import (
    GridRoughPath,
    PairRoughPath,
    Phi,
    _norms,
    canonical_lift,
    dist_p,
    level_distance,
    pair_path,
    trivial_path,
    variation_norm,
)


@dataclass(frozen=True, eq=False)
class TangentRep:
    base: GridRoughPath
    Z: PairRoughPath
    phi: Phi

    def __post_init__(self) -> None:
        X = self.base
        if self.Z.d != X.dim or not self.Z.path.same_grid(X):
            raise InputError("Z must live over R^d + R^d on the base grid")
        if not self.Z.pi1().equals(X):
            raise InputError("first component of Z must coincide with the base path")
        if self.phi.d != X.dim or self.phi.n_points != X.n_points:
            raise InputError("phi must match the base grid and dimension")

    @property
    def d(self) -> int:
        return self.base.dim

    def direction(self) -> GridRoughPath:
        return self.Z.pi2()

    def coupling_running(self) -> np.ndarray:
        """Running values of ``pi_12(Z) + pi_21(Z) + phi`` from ``t_0``."""
        return self.Z.cross12() + self.Z.cross21() + self.phi.values

    def coupling_increments_to(self, j: int) -> np.ndarray:
        return self.Z.cross_sum_increments_to(j) + self.phi.increments_to(j)


def cross_integrals(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Running ``int x dy`` and ``int y dx`` for piecewise-linear interpolations.

    ``x`` and ``y`` are running level-1 values on a common grid.  Both integrals
    are exact for the linear interpolations (trapezoid weights per segment).
    """
    dx = np.diff(x, axis=0)
    dy = np.diff(y, axis=0)
    mid_x = x[:-1] + 0.5 * dx
    mid_y = y[:-1] + 0.5 * dy
    n, d = x.shape[0], x.shape[1]
    xdy = np.zeros((n, d, y.shape[1]))
    ydx = np.zeros((n, y.shape[1], d))
    xdy[1:] = np.cumsum(mid_x[:, :, None] * dy[:, None, :], axis=0)
    ydx[1:] = np.cumsum(mid_y[:, :, None] * dx[:, None, :], axis=0)
    return xdy, ydx


def young_extension(X: GridRoughPath, y: np.ndarray) -> PairRoughPath:
    """Pair path over ``(X, lift(y))`` with cross blocks given by Young integrals.

    ``y`` holds the values of a piecewise-linear path on the grid of ``X``.
    The level-1 of ``X`` is interpolated linearly between grid points, which is
    exact when ``X`` is itself a canonical lift on this grid.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape != (X.n_points, X.dim):
        raise InputError(f"direction values must have shape {(X.n_points, X.dim)}, got {y.shape}")
    Y = canonical_lift(X.times, y)
    xdy, ydx = cross_integrals(X.level1, Y.level1)
    return pair_path(X, Y, xdy, ydx)


def zero_cross_extension(X: GridRoughPath, Y: GridRoughPath) -> PairRoughPath:
    """Pair path with vanishing cross blocks.

    Cross blocks can only vanish on every interval when one of the components
    is the trivial path, so anything else is rejected.
    """
    if np.any(X.level1 != 0.0) and np.any(Y.level1 != 0.0):
        raise InputError("zero cross blocks are only consistent when one component is trivial")
    zeros = np.zeros((X.n_points, X.dim, X.dim))
    return pair_path(X, Y, zeros, zeros)


def zero_tangent(X: GridRoughPath) -> TangentRep:
    Z = zero_cross_extension(X, trivial_path(X.times, X.dim))
    return TangentRep(X, Z, Phi.zeros(X.n_points, X.dim))


def linear_extension(times: np.ndarray, level1: np.ndarray) -> GridRoughPath:
    """Canonical lift of the linear interpolation of running level-1 values."""
    return canonical_lift(times, level1)


def variational_curve(rep: TangentRep, eps: float) -> GridRoughPath:
    X, Y = rep.base, rep.direction()
    return GridRoughPath(
        X.times,
        X.level1 + eps * Y.level1,
        X.level2 + eps * rep.coupling_running() + (eps * eps) * Y.level2,
    )


def level2_table(X: GridRoughPath) -> np.ndarray:
    """Level-2 interval values ``X^2_{t_s,t_t}`` for all grid pairs (upper triangle meaningful)."""
    l1, l2 = X.level1, X.level2
    return l2[None, :] - l2[:, None] - l1[:, None, :, None] * (l1[None, :, None, :] - l1[:, None, None, :])


def _chen_derivative_table(X: GridRoughPath, d1: np.ndarray, d2_running: np.ndarray) -> np.ndarray:
    # derivative of c^2_{s,t} = c^2_{0,t} - c^2_{0,s} - c^1_{0,s} (c^1_{0,t} - c^1_{0,s})
    x = X.level1
    inc_x = x[None, :] - x[:, None]
    inc_d = d1[None, :] - d1[:, None]
    return (
        d2_running[None, :]
        - d2_running[:, None]
        - d1[:, None, :, None] * inc_x[:, :, None, :]
        - x[:, None, :, None] * inc_d[:, :, None, :]
    )


def tangent_from_curve(
    X: GridRoughPath,
    d1: np.ndarray,
    d2: np.ndarray,
    W: PairRoughPath,
    tol: float = 1e-10,
) -> TangentRep:
    """Representative whose variational curve has derivative ``(d1, d2)`` at zero.

    ``d1`` holds running level-1 derivative values.  ``d2`` is either a running
    array ``(n_points, d, d)`` or a table of interval values ``(n_points, n_points, d, d)``;
    in the table case the additivity of the resulting ``phi`` is verified to ``tol``.
    ``W`` must extend ``(X^1, d1)``.
    """
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    n, d = X.n_points, X.dim
    if d1.shape != (n, d):
        raise InputError(f"d1 must have shape {(n, d)}, got {d1.shape}")
    if W.d != d or not W.path.same_grid(X):
        raise InputError("extension W must live over R^d + R^d on the base grid")
    scale = max(1.0, float(np.max(np.abs(X.level1))), float(np.max(np.abs(d1))))
    if np.max(np.abs(W.path.level1[:, :d] - X.level1)) > tol * scale:
        raise InputError("first level-1 component of W differs from the base path")
    if np.max(np.abs(W.path.level1[:, d:] - d1)) > tol * scale:
        raise InputError("second level-1 component of W differs from d1")
    if d2.shape == (n, d, d):
        phi = Phi(d2 - W.cross12() - W.cross21())
    elif d2.shape == (n, n, d, d):
        w_table = level2_table(W.path)
        phi_table = d2 - w_table[:, :, :d, d:] - w_table[:, :, d:, :d]
        phi = Phi.from_pair_values(phi_table, tol=tol)
    else:
        raise InputError(f"d2 must have shape {(n, d, d)} or {(n, n, d, d)}, got {d2.shape}")
    Y = W.pi2()
    Z = pair_path(X, Y, W.cross12(), W.cross21())
    return TangentRep(X, Z, phi)


def _derivative_weights(eps: np.ndarray) -> np.ndarray:
    k = np.arange(eps.shape[0])
    vander = eps[None, :] ** k[:, None]
    rhs = np.zeros(eps.shape[0])
    rhs[1] = 1.0
    return np.linalg.solve(vander, rhs)


def numeric_curve_derivative(
    samples: Sequence[tuple[float, GridRoughPath]],
) -> tuple[np.ndarray, np.ndarray]:
    """Finite-difference derivative at ``eps = 0`` of a sampled curve of rough paths.

    Returns running level-1 derivatives and a table of level-2 interval
    derivatives.  The stencil weights are exact on polynomials of degree below
    the number of samples, so a symmetric 3-point stencil is second order.
    """
    if len(samples) < 3:
        raise InputError("need at least three samples")
    ordered = sorted(samples, key=lambda s: s[0])
    eps = np.array([float(e) for e, _ in ordered])
    width = float(np.max(np.abs(eps)))
    if width == 0.0 or not np.allclose(eps, -eps[::-1], rtol=0.0, atol=1e-14 * width):
        raise InputError(f"stencil must be symmetric around 0, got {eps.tolist()}")
    if not np.any(eps == 0.0):
        raise InputError("stencil must contain 0")
    paths = [X for _, X in ordered]
    ref = paths[0]
    if any(not X.same_grid(ref) or X.dim != ref.dim for X in paths):
        raise InputError("all samples must share grid and dimension")
    w = _derivative_weights(eps)
    d1 = sum(wj * X.level1 for wj, X in zip(w, paths))
    d2 = sum(wj * level2_table(X) for wj, X in zip(w, paths))
    return np.asarray(d1), np.asarray(d2)


def _same_base(rep1: TangentRep, rep2: TangentRep) -> None:
    if not rep1.base.equals(rep2.base):
        raise InputError("tangent representatives live over different base paths")


def _coupling_scale(*reps: TangentRep) -> float:
    scale = 1.0
    for rep in reps:
        scale = max(scale, float(np.max(np.abs(rep.direction().level1))))
        for j in range(1, rep.base.n_points):
            scale = max(scale, float(np.max(np.abs(rep.coupling_increments_to(j)))))
    return scale


def equivalent(rep1: TangentRep, rep2: TangentRep, tol: float = 1e-10) -> bool:
    """Equality of variational-curve derivatives at zero on every grid interval.

    The tolerance is absolute after dividing by ``max(1, largest interval value)``.
    """
    _same_base(rep1, rep2)
    bound = tol * _coupling_scale(rep1, rep2)
    Y1, Y2 = rep1.direction(), rep2.direction()
    for j in range(1, rep1.base.n_points):
        if np.max(np.abs(Y1.increments_to(j)[0] - Y2.increments_to(j)[0])) > bound:
            return False
        if np.max(np.abs(rep1.coupling_increments_to(j) - rep2.coupling_increments_to(j))) > bound:
            return False
    return True


def tangent_add(rep1: TangentRep, rep2: TangentRep, W: GridRoughPath, tol: float = 1e-12) -> TangentRep:
    """Sum of two tangent vectors; ``W`` extends the summed direction increments."""
    _same_base(rep1, rep2)
    X = rep1.base
    y_sum = rep1.direction().level1 + rep2.direction().level1
    if not W.same_grid(X) or W.dim != X.dim:
        raise InputError("extension W must share grid and dimension with the base")
    if np.max(np.abs(W.level1 - y_sum)) > tol * max(1.0, float(np.max(np.abs(y_sum)))):
        raise InputError("level-1 of W must equal the sum of the two direction paths")
    Z = pair_path(
        X,
        GridRoughPath(X.times, y_sum, W.level2),
        rep1.Z.cross12() + rep2.Z.cross12(),
        rep1.Z.cross21() + rep2.Z.cross21(),
    )
    return TangentRep(X, Z, rep1.phi + rep2.phi)


def tangent_scale(lam: float, rep: TangentRep) -> TangentRep:
    Y = rep.direction()
    Z = pair_path(
        rep.base,
        GridRoughPath(Y.times, lam * Y.level1, (lam * lam) * Y.level2),
        lam * rep.Z.cross12(),
        lam * rep.Z.cross21(),
    )
    return TangentRep(rep.base, Z, rep.phi.scaled(lam))


def coupling_distance(rep1: TangentRep, rep2: TangentRep, p: float) -> float:
    def norms_to(j: int) -> np.ndarray:
        return _norms(rep1.coupling_increments_to(j) - rep2.coupling_increments_to(j))

    return variation_norm(norms_to, rep1.base.n_points, p / 2)


def tangent_dist(rep1: TangentRep, rep2: TangentRep, p: float) -> float:
    """Distance between tangent vectors, possibly over different base paths."""
    if not rep1.base.same_grid(rep2.base) or rep1.d != rep2.d:
        raise InputError("tangent representatives must share grid and dimension")
    return max(
        dist_p(rep1.base, rep2.base, p),
        level_distance(rep1.direction(), rep2.direction(), p, 1),
        coupling_distance(rep1, rep2, p),
    )


def tangent_norm(rep: TangentRep, p: float) -> float:
    """Distance to the zero tangent at the same base (the base term vanishes)."""
    zero = zero_tangent(rep.base)
    return max(
        level_distance(rep.direction(), zero.direction(), p, 1),
        coupling_distance(rep, zero, p),
    )


def random_tangent(X: GridRoughPath, rng: np.random.Generator, size: float = 1.0) -> TangentRep:
    """Representative with a random piecewise-linear direction and a random ``phi``."""
    n, d = X.n_points, X.dim
    steps = rng.uniform(-1.0, 1.0, size=(n - 1, d)) * (size / np.sqrt(n - 1))
    y = np.zeros((n, d))
    y[1:] = np.cumsum(steps, axis=0)
    phi = np.zeros((n, d, d))
    phi[1:] = np.cumsum(rng.uniform(-1.0, 1.0, size=(n - 1, d, d)) * (size * size / (n - 1)), axis=0)
    return TangentRep(X, young_extension(X, y), Phi(phi))
