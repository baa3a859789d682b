"""Dyadic area construction for parametric families of rough paths.

Given a family ``eps -> X(eps)`` on ``[0, 1]`` satisfying a uniform Hölder and
Lipschitz-in-parameter condition, cross areas between ``X(eps)`` and
``X(delta)`` are defined on dyadic intervals by halving: both halves of an
interval receive the same area, chosen so that the composition rule

    A_{s,u} = A_{s,t} + A_{t,u} + (x_{s,t}(eps) x_{t,u}(delta) - x_{s,t}(delta) x_{t,u}(eps)) / 2

holds.  These areas complete ``(X(eps), X(delta))`` to a rough path over
``R^d + R^d`` and let one integrate the family against a discrete measure.
"""

from __future__ import annotations

import json
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .parallel import pmap
from .roughpath import GridRoughPath, PairRoughPath, _norms, canonical_lift, pair_path, scalar_mul

Control = Callable[[np.ndarray, np.ndarray], np.ndarray]


def time_control(s: np.ndarray, t: np.ndarray) -> np.ndarray:
    """The control ``omega(s, t) = t - s``."""
    return np.asarray(t, dtype=float) - np.asarray(s, dtype=float)


@dataclass(frozen=True, eq=False)
class ParametricFamily:
    """A map from a parameter to rough paths on a common grid over ``[0, 1]``.

    ``holder_constant`` and ``omega`` are the declared constants: every member
    should satisfy ``|X^i_{s,t}| <= C omega(s,t)^{i/p}`` and the same bound with an
    extra factor ``|eps - eps'|`` for differences of members.  ``params`` lists
    the only admissible parameters when the family is a finite table.
    """

    sampler: Callable[[float], GridRoughPath]
    times: np.ndarray
    dim: int
    p: float
    holder_constant: float
    omega: Control = time_control
    name: str = "family"
    params: tuple[float, ...] | None = None
    _cache: dict[float, GridRoughPath] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        if times[0] != 0.0 or times[-1] != 1.0:
            raise InputError("family grids must span [0, 1]")
        if not 2.0 < self.p < 3.0:
            raise InputError(f"p must lie in (2, 3), got {self.p}")
        object.__setattr__(self, "times", times)

    def sample(self, eps: float) -> GridRoughPath:
        key = float(eps)
        if key not in self._cache:
            X = self.sampler(key)
            if not np.array_equal(X.times, self.times) or X.dim != self.dim:
                raise InputError(f"family member at eps={key!r} is off the common grid")
            self._cache[key] = X
        return self._cache[key]

    def omega_table(self) -> np.ndarray:
        t = self.times
        return np.asarray(self.omega(t[:, None], t[None, :]), dtype=float)


def dyadic_times(depth: int) -> np.ndarray:
    return np.arange(2**depth + 1, dtype=float) / 2**depth


def colinear_family(direction: Sequence[float], depth: int, p: float = 2.5) -> ParametricFamily:
    """``x(eps)_t = eps t v``: straight lines through a common direction."""
    v = np.asarray(direction, dtype=float)
    times = dyadic_times(depth)
    speed = float(np.linalg.norm(v))

    def sampler(eps: float) -> GridRoughPath:
        x = times[:, None] * (eps * v)[None, :]
        return GridRoughPath(times, x, 0.5 * x[:, :, None] * x[:, None, :])

    return ParametricFamily(sampler, times, v.shape[0], p, max(speed, speed * speed), name="colinear")


def scaled_lift_family(times: np.ndarray, points: np.ndarray, p: float = 2.5) -> ParametricFamily:
    """``X(eps) = lift(eps x)`` for a piecewise-linear ``x``, parameters in ``[0, 1]``.

    With ``L`` the largest segment speed, both family bounds hold with
    ``C = max(L, L^2)`` and ``omega(s, t) = t - s``.
    """
    t = np.asarray(times, dtype=float)
    t = (t - t[0]) / (t[-1] - t[0])
    base = canonical_lift(t, points)
    speed = float(np.max(_norms(np.diff(base.level1, axis=0)) / np.diff(t)))

    def sampler(eps: float) -> GridRoughPath:
        return scalar_mul(eps, base)

    return ParametricFamily(sampler, base.times, base.dim, p, max(speed, speed * speed), name="scaled-lift")


def default_lift_points(depth: int) -> tuple[np.ndarray, np.ndarray]:
    """A fixed two-dimensional loop sampled on the dyadic grid of ``depth``."""
    t = dyadic_times(depth)
    pts = np.stack([np.cos(2 * np.pi * t) - 1.0, 0.5 * np.sin(4 * np.pi * t)], axis=1) / (2 * np.pi)
    return t, pts


def _fit_holder_constant(members: Sequence[tuple[float, GridRoughPath]], p: float, omega: Control) -> float:
    worst = 0.0
    times = members[0][1].times
    om = np.asarray(omega(times[:, None], times[None, :]), dtype=float)
    for j in range(1, times.shape[0]):
        w = om[:j, j]
        for k, (e, X) in enumerate(members):
            a1, a2 = X.increments_to(j)
            worst = max(worst, float(np.max(_norms(a1) / w ** (1 / p))), float(np.max(_norms(a2) / w ** (2 / p))))
            for e2, X2 in members[k + 1 :]:
                b1, b2 = X2.increments_to(j)
                de = abs(e2 - e)
                worst = max(
                    worst,
                    float(np.max(_norms(a1 - b1) / (de * w ** (1 / p)))),
                    float(np.max(_norms(a2 - b2) / (de * w ** (2 / p)))),
                )
    return worst


def directory_family(
    directory: str | Path,
    p: float = 2.5,
    holder_constant: float | None = None,
) -> ParametricFamily:
    """Family read from ``<eps>.json`` rough-path files; only stored parameters can be sampled.

    Without a declared constant, the smallest constant compatible with the
    stored members and ``omega(s, t) = t - s`` is used.
    """
    from .io import read_path_json

    folder = Path(directory)
    files = sorted(folder.glob("*.json"))
    if not files:
        raise InputError(f"no rough-path JSON files in {folder}")
    members: dict[float, GridRoughPath] = {}
    for f in files:
        try:
            eps = float(f.stem)
        except ValueError as exc:
            raise InputError(f"file name {f.name} is not a parameter value") from exc
        members[eps] = read_path_json(f)
    ordered = sorted(members.items())
    ref = ordered[0][1]
    for eps, X in ordered:
        if not X.same_grid(ref) or X.dim != ref.dim:
            raise InputError(f"member {eps!r} is off the common grid")
    if holder_constant is None:
        holder_constant = _fit_holder_constant(ordered, p, time_control)

    def sampler(eps: float) -> GridRoughPath:
        if eps not in members:
            raise InputError(f"parameter {eps!r} is not stored in {folder}")
        return members[eps]

    return ParametricFamily(sampler, ref.times, ref.dim, p, float(holder_constant), name=f"file:{folder}",
                            params=tuple(e for e, _ in ordered))


@dataclass
class FamilyReport:
    holder_ratio: float
    lipschitz_ratio: float
    holder_constant_needed: float
    lipschitz_constant_needed: float
    holder_violations: list[tuple[float, int, int, int]]
    lipschitz_violations: list[tuple[float, float, int, int, int]]
    control_violations: list[tuple[int, int, int]]

    @property
    def ok(self) -> bool:
        return not (self.holder_violations or self.lipschitz_violations or self.control_violations)


def check_family_condition(
    fam: ParametricFamily,
    eps_samples: Sequence[float],
    pair_budget: int = 2000,
    seed: int = 0,
    rtol: float = 1e-12,
) -> FamilyReport:
    """Check the declared Hölder, Lipschitz and control conditions on samples.

    Ratios are measured against the declared bounds, so a value above one is a
    violation.  Violations are listed as ``(eps, level, s, t)``,
    ``(eps, eps', level, s, t)`` and ``(s, t, u)`` index tuples.
    """
    eps = [float(e) for e in eps_samples]
    if len(eps) < 2:
        raise InputError("need at least two parameter samples")
    rng = np.random.default_rng(seed)
    n = fam.times.shape[0]
    om = fam.omega_table()
    C, p = fam.holder_constant, fam.p

    pairs = [(s, t) for t in range(1, n) for s in range(t)]
    if len(pairs) > pair_budget:
        pick = rng.choice(len(pairs), size=pair_budget, replace=False)
        pairs = [pairs[i] for i in sorted(pick)]
    s_idx = np.array([s for s, _ in pairs])
    t_idx = np.array([t for _, t in pairs])
    w = om[s_idx, t_idx]

    def interval_values(X: GridRoughPath) -> tuple[np.ndarray, np.ndarray]:
        a1 = X.level1[t_idx] - X.level1[s_idx]
        a2 = X.level2[t_idx] - X.level2[s_idx] - X.level1[s_idx][:, :, None] * a1[:, None, :]
        return _norms(a1), _norms(a2)

    def ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(num == 0.0, 0.0, num / den)
        return np.where(np.isnan(r), np.inf, r)

    members = {e: fam.sample(e) for e in eps}
    vals = {e: interval_values(X) for e, X in members.items()}
    holder_ratio = holder_needed = 0.0
    holder_bad: list[tuple[float, int, int, int]] = []
    for e in eps:
        for level in (1, 2):
            need = ratio(vals[e][level - 1], w ** (level / p))
            holder_needed = max(holder_needed, float(need.max()))
            r = need / C if C > 0 else np.where(need > 0, np.inf, 0.0)
            holder_ratio = max(holder_ratio, float(r.max()))
            for i in np.flatnonzero(r > 1.0 + rtol)[:10]:
                holder_bad.append((e, level, int(s_idx[i]), int(t_idx[i])))

    lip_ratio = lip_needed = 0.0
    lip_bad: list[tuple[float, float, int, int, int]] = []
    for a, e1 in enumerate(eps):
        for e2 in eps[a + 1 :]:
            de = abs(e2 - e1)
            if de == 0.0:
                continue
            X1, X2 = members[e1], members[e2]
            d1 = X1.level1[t_idx] - X1.level1[s_idx] - (X2.level1[t_idx] - X2.level1[s_idx])
            inc1_1 = X1.level1[t_idx] - X1.level1[s_idx]
            inc2_1 = X2.level1[t_idx] - X2.level1[s_idx]
            lev2_1 = X1.level2[t_idx] - X1.level2[s_idx] - X1.level1[s_idx][:, :, None] * inc1_1[:, None, :]
            lev2_2 = X2.level2[t_idx] - X2.level2[s_idx] - X2.level1[s_idx][:, :, None] * inc2_1[:, None, :]
            for level, diff in ((1, _norms(d1)), (2, _norms(lev2_1 - lev2_2))):
                need = ratio(diff, de * w ** (level / p))
                lip_needed = max(lip_needed, float(need.max()))
                r = need / C if C > 0 else np.where(need > 0, np.inf, 0.0)
                lip_ratio = max(lip_ratio, float(r.max()))
                for i in np.flatnonzero(r > 1.0 + rtol)[:10]:
                    lip_bad.append((e1, e2, level, int(s_idx[i]), int(t_idx[i])))

    control_bad: list[tuple[int, int, int]] = []
    diag = np.abs(np.diag(om))
    scale = max(1.0, float(np.max(np.abs(om))))
    for k in np.flatnonzero(diag > rtol * scale)[:10]:
        control_bad.append((int(k), int(k), int(k)))
    triple_budget = max(pair_budget, 1)
    total = n * (n - 1) * (n - 2) // 6
    if total <= triple_budget:
        triples = [(s, t, u) for u in range(n) for t in range(u) for s in range(t)]
    else:
        raw = np.sort(np.stack([rng.choice(n, size=3, replace=False) for _ in range(triple_budget)]), axis=1)
        triples = [tuple(int(v) for v in row) for row in raw]
    for s, t, u in triples:
        if om[s, t] < 0 or om[t, u] < 0 or om[s, t] + om[t, u] > om[s, u] + rtol * scale:
            control_bad.append((s, t, u))
            if len(control_bad) >= 10:
                break

    return FamilyReport(
        holder_ratio=holder_ratio,
        lipschitz_ratio=lip_ratio,
        holder_constant_needed=holder_needed,
        lipschitz_constant_needed=lip_needed,
        holder_violations=holder_bad,
        lipschitz_violations=lip_bad,
        control_violations=control_bad,
    )


def _dyadic_indices(fam: ParametricFamily, depth: int) -> np.ndarray:
    if depth < 1:
        raise InputError(f"depth must be at least 1, got {depth}")
    target = dyadic_times(depth)
    idx = np.searchsorted(fam.times, target - 1e-12)
    idx = np.clip(idx, 0, fam.times.shape[0] - 1)
    miss = np.abs(fam.times[idx] - target) > 1e-12
    if np.any(miss):
        k = int(np.argmax(miss))
        raise InputError(f"family grid lacks the dyadic time {k}/2^{depth}")
    return idx


def _seed_matrix(c0: float | np.ndarray, d: int) -> np.ndarray:
    seed = np.asarray(c0, dtype=float)
    if seed.ndim == 0:
        return np.full((d, d), float(seed))
    if seed.shape != (d, d):
        raise InputError(f"seed must be a scalar or a {d}x{d} array")
    return seed.copy()


def _cross(a_left: np.ndarray, b_right: np.ndarray, a_right: np.ndarray, b_left: np.ndarray) -> np.ndarray:
    """``a_left (x) b_right - a_right (x) b_left`` for stacks of vectors."""
    return a_left[..., :, None] * b_right[..., None, :] - a_right[..., :, None] * b_left[..., None, :]


@dataclass(frozen=True, eq=False)
class DyadicArea:
    """Cross areas between ``x(eps)`` (row index) and ``x(delta)`` (column index).

    ``levels[n][k]`` is the area on ``[k / 2^n, (k + 1) / 2^n]``.  The arrays
    ``x_eps`` and ``x_delta`` hold running level-1 values at the finest dyadic points.
    """

    depth: int
    eps: float
    delta: float
    seed: np.ndarray
    levels: tuple[np.ndarray, ...]
    x_eps: np.ndarray
    x_delta: np.ndarray

    @property
    def d(self) -> int:
        return int(self.seed.shape[0])

    def area(self, level: int, k: int) -> np.ndarray:
        return self.levels[level][k]

    def full_area(self, level: int, k: int, eps_area: np.ndarray, delta_area: np.ndarray) -> np.ndarray:
        """Antisymmetric ``2d x 2d`` area with the given diagonal blocks."""
        a = self.levels[level][k]
        return np.block([[eps_area, a], [-a.T, delta_area]])

    def running(self) -> np.ndarray:
        """``A_{0, k / 2^N}`` for every finest dyadic point, composed left to right."""
        finest = self.levels[-1]
        de = np.diff(self.x_eps, axis=0)
        dd = np.diff(self.x_delta, axis=0)
        steps = finest + 0.5 * _cross(self.x_eps[:-1], dd, de, self.x_delta[:-1])
        out = np.zeros((finest.shape[0] + 1, self.d, self.d))
        out[1:] = np.cumsum(steps, axis=0)
        return out

    def _index(self, s: float, floor: bool) -> int:
        scaled = float(s) * 2**self.depth
        k = int(np.floor(scaled)) if floor else int(round(scaled))
        if not floor and abs(scaled - k) > 1e-9:
            raise InputError(f"time {s!r} is not dyadic of level <= {self.depth}")
        if not 0 <= k <= 2**self.depth:
            raise InputError(f"time {s!r} lies outside [0, 1]")
        return k

    def area_at(self, s: float, t: float, floor: bool = False) -> np.ndarray:
        """Area on ``[s, t]`` composed from the finest pieces.

        With ``floor=True`` non-dyadic endpoints are rounded down to level ``depth``.
        """
        i, j = self._index(s, floor), self._index(t, floor)
        if i >= j:
            raise InputError(f"need s < t, got s={s!r}, t={t!r}")
        return self.area_between(np.array([i]), np.array([j]))[0]

    def area_between(self, i: np.ndarray, j: np.ndarray, running: np.ndarray | None = None) -> np.ndarray:
        """Vectorized areas between finest dyadic indices ``i`` and ``j``."""
        run = self.running() if running is None else running
        xe, xd = self.x_eps, self.x_delta
        return run[j] - run[i] - 0.5 * _cross(xe[i], xd[j] - xd[i], xe[j] - xe[i], xd[i])

    def halving_residual(self) -> float:
        """Largest defect of the composition rule between each interval and its two halves."""
        worst = 0.0
        N = self.depth
        for n in range(N):
            stride = 2 ** (N - n - 1)
            pts_e = self.x_eps[::stride]
            pts_d = self.x_delta[::stride]
            inc_e = np.diff(pts_e, axis=0)
            inc_d = np.diff(pts_d, axis=0)
            left, right = self.levels[n + 1][0::2], self.levels[n + 1][1::2]
            composed = left + right + 0.5 * _cross(inc_e[0::2], inc_d[1::2], inc_e[1::2], inc_d[0::2])
            worst = max(worst, float(np.max(np.abs(composed - self.levels[n]))))
        return worst

    def coherence_residual(self) -> float:
        """Largest gap between stored areas and areas composed from the finest level."""
        run = self.running()
        worst = 0.0
        for n, table in enumerate(self.levels):
            stride = 2 ** (self.depth - n)
            k = np.arange(2**n)
            worst = max(worst, float(np.max(np.abs(self.area_between(k * stride, (k + 1) * stride, run) - table))))
        return worst

    def composition_residual(self, triples: np.ndarray) -> float:
        """Defect of the composition rule on finest-index triples ``(s, t, u)``."""
        run = self.running()
        s, t, u = (np.asarray(triples)[:, c] for c in range(3))
        xe, xd = self.x_eps, self.x_delta
        lhs = self.area_between(s, u, run)
        rhs = (
            self.area_between(s, t, run)
            + self.area_between(t, u, run)
            + 0.5 * _cross(xe[t] - xe[s], xd[u] - xd[t], xe[u] - xe[t], xd[t] - xd[s])
        )
        return float(np.max(np.abs(lhs - rhs))) if len(s) else 0.0

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "eps": self.eps,
            "delta": self.delta,
            "levels": [table.tolist() for table in self.levels],
        }


def build_dyadic_area(
    fam: ParametricFamily,
    eps: float,
    delta: float,
    depth: int = 10,
    c0: float | np.ndarray = 0.0,
) -> DyadicArea:
    """Dyadic cross areas seeded with ``A_{0,1} = c0``.

    A scalar seed is broadcast to every entry.  Each interval's two halves get
    ``A / 2 - (x_L(eps) x_R(delta) - x_R(eps) x_L(delta)) / 4``.
    """
    idx = _dyadic_indices(fam, depth)
    xe = fam.sample(eps).level1[idx]
    xd = fam.sample(delta).level1[idx]
    seed = _seed_matrix(c0, fam.dim)
    levels = [seed[None].copy()]
    for n in range(depth):
        stride = 2 ** (depth - n - 1)
        inc_e = np.diff(xe[::stride], axis=0)
        inc_d = np.diff(xd[::stride], axis=0)
        cross = _cross(inc_e[0::2], inc_d[1::2], inc_e[1::2], inc_d[0::2])
        half = 0.5 * levels[-1] - 0.25 * cross
        levels.append(np.repeat(half, 2, axis=0))
    for table in levels:
        table.flags.writeable = False
    return DyadicArea(depth, float(eps), float(delta), seed, tuple(levels), xe, xd)


def area_lipschitz_constant(fam: ParametricFamily) -> float:
    """``C_hat = C^2 omega(0,1)^{2/p} / 2 * sum_{l>=0} 2^{l(2-p)/p}`` (horizon one)."""
    p = fam.p
    om = float(fam.omega(np.array(0.0), np.array(1.0)))
    series = 1.0 / (1.0 - 2.0 ** ((2.0 - p) / p))
    return 0.5 * fam.holder_constant**2 * om ** (2.0 / p) * series


def area_lipschitz_bound(fam: ParametricFamily, d_eps: float, d_delta: float, level: int) -> float:
    return 4.0 * area_lipschitz_constant(fam) * (abs(d_eps) + abs(d_delta)) * 2.0 ** (-2.0 * level / fam.p)


def area_lipschitz_ratio(
    fam: ParametricFamily,
    params: Sequence[float],
    depth: int,
    c0: float | np.ndarray = 0.0,
) -> float:
    """Worst ratio of observed area differences to the Lipschitz bound over a parameter grid."""
    grid = [(e, dl) for e in params for dl in params]
    areas = dict(zip(grid, pmap(lambda ed: build_dyadic_area(fam, ed[0], ed[1], depth, c0), grid)))
    worst = 0.0
    for a, (e1, d1) in enumerate(grid):
        for e2, d2 in grid[a + 1 :]:
            A, B = areas[(e1, d1)], areas[(e2, d2)]
            for n in range(1, depth + 1):
                bound = area_lipschitz_bound(fam, e1 - e2, d1 - d2, n)
                diff = float(np.max(np.abs(A.levels[n] - B.levels[n])))
                if diff > 0.0:
                    worst = max(worst, diff / bound if bound > 0 else np.inf)
    return worst


def assemble_Z(
    fam: ParametricFamily,
    eps: float,
    delta: float,
    depth: int = 10,
    c0: float | np.ndarray = 0.0,
    area: DyadicArea | None = None,
) -> PairRoughPath:
    """Joint rough path ``Z(eps, delta)`` over ``R^d + R^d`` on the dyadic grid."""
    A = build_dyadic_area(fam, eps, delta, depth, c0) if area is None else area
    idx = _dyadic_indices(fam, depth)
    times = dyadic_times(depth)
    Xe, Xd = fam.sample(eps), fam.sample(delta)
    pe = GridRoughPath(times, Xe.level1[idx], Xe.level2[idx])
    pd = GridRoughPath(times, Xd.level1[idx], Xd.level2[idx])
    run = A.running()
    xe, xd = pe.level1, pd.level1
    c12 = 0.5 * xe[:, :, None] * xd[:, None, :] + run
    c21 = 0.5 * xd[:, :, None] * xe[:, None, :] - np.transpose(run, (0, 2, 1))
    return pair_path(pe, pd, c12, c21)


def integrate_family(
    fam: ParametricFamily,
    measure: Sequence[tuple[float, float]],
    depth: int = 10,
    c0: float | np.ndarray = 0.0,
    self_pairs: str = "construction",
) -> GridRoughPath:
    """Integral of the family against the discrete measure ``sum_j w_j delta_{eps_j}``.

    Level two sums ``w_a w_b`` times the cross block of ``Z(eps_a, eps_b)`` over
    ordered pairs of atoms.  With ``self_pairs="family"`` an atom paired with
    itself contributes its own second level instead of the constructed block,
    which makes a unit point mass reproduce its member exactly.
    """
    if not measure:
        raise InputError("measure is empty")
    if self_pairs not in ("construction", "family"):
        raise InputError(f"self_pairs must be 'construction' or 'family', got {self_pairs!r}")
    atoms = [(float(e), float(w)) for e, w in measure]
    if any(w < 0 for _, w in atoms):
        warnings.warn("measure has negative weights", stacklevel=2)
    idx = _dyadic_indices(fam, depth)
    times = dyadic_times(depth)
    level1 = sum(w * fam.sample(e).level1[idx] for e, w in atoms)
    pairs = [(a, b) for a in range(len(atoms)) for b in range(len(atoms))]

    def block(ab: tuple[int, int]) -> np.ndarray:
        (ea, wa), (eb, wb) = atoms[ab[0]], atoms[ab[1]]
        if ab[0] == ab[1] and self_pairs == "family":
            return (wa * wb) * fam.sample(ea).level2[idx]
        return (wa * wb) * assemble_Z(fam, ea, eb, depth, c0).cross12()

    blocks = pmap(block, pairs)
    level2 = blocks[0].copy()
    for b in blocks[1:]:
        level2 += b
    return GridRoughPath(times, np.asarray(level1), level2)


def area_json_dump(area: DyadicArea, path: str | Path) -> None:
    Path(path).write_text(json.dumps(area.to_json()))
