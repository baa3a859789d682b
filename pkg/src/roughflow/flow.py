"""Flow equations on rough-path space driven by tangent-valued vector fields.

A vector field assigns to every rough path ``X`` a tangent representative
``[Z(X), phi(X)]`` at ``X``.  The Euler scheme moves along the variational
curve of the field for one step at a time; each step is therefore a rough path
by construction.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import FlowError, InputError
from .roughpath import (
    GridRoughPath,
    PairRoughPath,
    Phi,
    dist_p,
    level_distance,
    pair_path,
    trivial_path,
    variation_norm,
    _norms,
)
from .tangent import (
    TangentRep,
    coupling_distance,
    random_tangent,
    tangent_dist,
    tangent_norm,
    variational_curve,
    young_extension,
    zero_cross_extension,
)

Evaluator = Callable[[GridRoughPath], tuple[PairRoughPath, Phi]]


@dataclass(frozen=True)
class FieldConstants:
    """Declared Lipschitz constants of a vector field; ``None`` means unknown.

    ``tangent_p`` and ``tangent_q`` bound ``d~_p(F(X), F(Y))`` and ``d~_q(F(X), F(Y))``
    by a multiple of ``d_p(X, Y)`` near the initial state.  ``z_p``, ``phi_p``,
    ``z_q`` and ``phi_q`` are global constants for ``Z`` and ``phi`` separately:
    ``d_p(Z(X), Z(Y)) <= z_p d_p(X, Y)``, ``d_{p/2}(phi(X), phi(Y)) <= phi_p d_p(X, Y)``
    and the same with ``q`` on both sides.
    """

    tangent_p: float | None = None
    tangent_q: float | None = None
    z_p: float | None = None
    phi_p: float | None = None
    z_q: float | None = None
    phi_q: float | None = None

    def has_global(self) -> bool:
        return None not in (self.z_p, self.phi_p, self.z_q, self.phi_q)


class VectorField:
    def __init__(self, evaluate: Evaluator, constants: FieldConstants | None = None, name: str = "field"):
        self._evaluate = evaluate
        self.constants = constants or FieldConstants()
        self.name = name

    def __call__(self, X: GridRoughPath) -> TangentRep:
        Z, phi = self._evaluate(X)
        if not Z.pi1().equals(X):
            raise InputError(f"field {self.name!r} returned Z whose first component is not its argument")
        return TangentRep(X, Z, phi)

    def speed(self, X: GridRoughPath, p: float) -> float:
        """``max(d~_p(F(X), 0), |pi_2(Z(X))^2|_{p/2})`` with 0 the zero tangent at ``X``."""
        rep = self(X)
        Y = rep.direction()
        return max(tangent_norm(rep, p), level_distance(Y, trivial_path(Y.times, Y.dim), p, 2))


def zero_field() -> VectorField:
    def evaluate(X: GridRoughPath) -> tuple[PairRoughPath, Phi]:
        return zero_cross_extension(X, trivial_path(X.times, X.dim)), Phi.zeros(X.n_points, X.dim)

    consts = FieldConstants(tangent_p=1.0, tangent_q=1.0, z_p=1.0, phi_p=0.0, z_q=1.0, phi_q=0.0)
    return VectorField(evaluate, consts, name="zero")


def young_cross_field(
    direction: np.ndarray,
    phi0: Phi | None = None,
    times: np.ndarray | None = None,
) -> VectorField:
    """Constant-direction field: ``Z(X)`` pairs ``X`` with the lift of ``h`` via Young integrals.

    ``direction`` holds the values of the piecewise-linear ``h`` on the grid.
    With ``V`` the total variation of ``h``, the declared constants are
    ``max(1, 3V)`` for the tangent distance and ``1 + 3V`` for ``Z``; ``phi`` is constant.
    """
    h = np.asarray(direction, dtype=float)
    if h.ndim == 1:
        h = h[:, None]
    n, d = h.shape
    phi = Phi.zeros(n, d) if phi0 is None else phi0
    if phi.n_points != n or phi.d != d:
        raise InputError("phi0 must live on the grid of the direction")
    grid = None if times is None else np.asarray(times, dtype=float)

    def evaluate(X: GridRoughPath) -> tuple[PairRoughPath, Phi]:
        if X.n_points != n or X.dim != d or (grid is not None and not np.array_equal(grid, X.times)):
            raise InputError("state and field direction live on different grids")
        return young_extension(X, h), phi

    var = float(np.sum(_norms(np.diff(h, axis=0))))
    tangent = max(1.0, 3.0 * var)
    consts = FieldConstants(tangent_p=tangent, tangent_q=tangent, z_p=1.0 + 3.0 * var, phi_p=0.0,
                            z_q=1.0 + 3.0 * var, phi_q=0.0)
    return VectorField(evaluate, consts, name="young")


def dilation_field(rate: float) -> VectorField:
    """``Z(X)`` is the image of ``X`` under ``v -> (v, rate v)`` and ``phi = 0``.

    The exact flow is the dilation ``U(tau) = exp(rate tau) . X_0`` while the Euler
    scheme gives ``(1 + rate dtau)^k . X_0``, a first-order approximation.
    """
    k = float(rate)

    def evaluate(X: GridRoughPath) -> tuple[PairRoughPath, Phi]:
        Y = GridRoughPath(X.times, k * X.level1, (k * k) * X.level2)
        return pair_path(X, Y, k * X.level2, k * X.level2), Phi.zeros(X.n_points, X.dim)

    tangent = max(1.0, 2.0 * abs(k))
    z = 1.0 + k * k
    consts = FieldConstants(tangent_p=tangent, tangent_q=tangent, z_p=z, phi_p=0.0, z_q=z, phi_q=0.0)
    return VectorField(evaluate, consts, name="dilation")


@dataclass(frozen=True, eq=False)
class FlowSolution:
    """Euler nodes ``taus[k]`` with states stored as running signatures."""

    field: VectorField
    taus: np.ndarray
    times: np.ndarray
    level1: np.ndarray
    level2: np.ndarray
    eps: float
    M: float
    alpha: float
    r: float
    p: float
    q: float
    residual_log: tuple[tuple[float, float, float], ...] = ()
    junctions: tuple[int, ...] = ()
    chunk_alphas: tuple[float, ...] = ()
    chunk_Ms: tuple[float, ...] = ()
    cauchy_log: tuple[dict, ...] = ()
    meta: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return int(self.taus.shape[0])

    def state(self, k: int) -> GridRoughPath:
        return GridRoughPath(self.times, self.level1[k], self.level2[k])

    @property
    def initial(self) -> GridRoughPath:
        return self.state(0)

    @property
    def terminal(self) -> GridRoughPath:
        return self.state(self.n_nodes - 1)

    def state_at(self, tau: float) -> GridRoughPath:
        """State at any ``tau`` in the domain, by the variational curve from the node on the left."""
        end = float(self.taus[-1])
        if not (0.0 <= tau <= end * (1 + 1e-12)):
            raise InputError(f"tau={tau!r} lies outside [0, {end!r}]")
        i = int(np.searchsorted(self.taus, tau, side="right") - 1)
        i = min(max(i, 0), self.n_nodes - 1)
        gap = tau - float(self.taus[i])
        if gap <= 0.0:
            return self.state(i)
        return variational_curve(self.field(self.state(i)), gap)


def euler_path(F: VectorField, X0: GridRoughPath, taus: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Run the Euler recursion through the nodes ``taus``."""
    K = taus.shape[0]
    l1 = np.empty((K, X0.n_points, X0.dim))
    l2 = np.empty((K, X0.n_points, X0.dim, X0.dim))
    l1[0], l2[0] = X0.level1, X0.level2
    U = X0
    for k in range(K - 1):
        U = variational_curve(F(U), float(taus[k + 1] - taus[k]))
        l1[k + 1], l2[k + 1] = U.level1, U.level2
    return l1, l2


def _monitor_indices(K: int, count: int | None) -> np.ndarray:
    if count is None or K <= count:
        return np.arange(K)
    return np.unique(np.linspace(0, K - 1, count).round().astype(int))


def probe_pairs(
    X0: GridRoughPath,
    seed: int = 0,
    scales: Sequence[float] = tuple(2.0**-k for k in range(1, 6)),
    per_scale: int = 2,
) -> list[tuple[GridRoughPath, GridRoughPath]]:
    """Pairs of perturbations of ``X0`` along random tangents at the given scales."""
    rng = np.random.default_rng(seed)
    pairs: list[tuple[GridRoughPath, GridRoughPath]] = []
    for s in scales:
        moved = [variational_curve(random_tangent(X0, rng), s) for _ in range(per_scale)]
        pairs.extend((X0, Y) for Y in moved)
        pairs.extend(zip(moved[:-1], moved[1:]))
    return pairs


@dataclass
class ProbeReport:
    ratio_p: float
    ratio_q: float
    direction_ratio_p: float
    direction_ratio_q: float
    declared_p: float | None
    declared_q: float | None
    worst_pair: int
    n_pairs: int

    @property
    def flagged(self) -> bool:
        over_p = self.declared_p is not None and self.ratio_p > self.declared_p * (1 + 1e-9)
        over_q = self.declared_q is not None and self.ratio_q > self.declared_q * (1 + 1e-9)
        return over_p or over_q


def lipschitz_probe(
    F: VectorField,
    pairs: Sequence[tuple[GridRoughPath, GridRoughPath]],
    p: float,
    q: float,
) -> ProbeReport:
    """Empirical ratios ``d~(F(X), F(Y)) / d_p(X, Y)`` over the given pairs.

    The full tangent distance includes ``d_p`` of the base paths, so its ratio is
    at least one; the direction ratios leave that term out.
    """
    if not pairs:
        raise InputError("need at least one pair")
    rp = rq = dp_ = dq_ = 0.0
    worst = -1
    for i, (X, Y) in enumerate(pairs):
        base = dist_p(X, Y, p)
        if base == 0.0:
            continue
        FX, FY = F(X), F(Y)
        direction_p = max(level_distance(FX.direction(), FY.direction(), p, 1), coupling_distance(FX, FY, p))
        direction_q = max(level_distance(FX.direction(), FY.direction(), q, 1), coupling_distance(FX, FY, q))
        full_p = max(base, direction_p)
        full_q = max(dist_p(X, Y, q), direction_q)
        if full_p / base > rp:
            worst = i
        rp = max(rp, full_p / base)
        rq = max(rq, full_q / base)
        dp_ = max(dp_, direction_p / base)
        dq_ = max(dq_, direction_q / base)
    return ProbeReport(rp, rq, dp_, dq_, F.constants.tangent_p, F.constants.tangent_q, worst, len(pairs))


def _tangent_lipschitz(F: VectorField, X0: GridRoughPath, p: float, q: float, seed: int) -> float:
    if F.constants.tangent_p is not None:
        return float(F.constants.tangent_p)
    return lipschitz_probe(F, probe_pairs(X0, seed), p, q).ratio_p


def _steps_for(alpha: float, max_step: float, dyadic: bool, minimum: int = 1) -> int:
    n = max(minimum, math.ceil(alpha / max_step - 1e-12))
    if dyadic:
        n = 1 << max(0, (n - 1).bit_length())
    return n


def _certify(F: VectorField, X0: GridRoughPath, l1, l2, times, M: float, r: float, p: float,
             monitor: int | None) -> str | None:
    for k in _monitor_indices(l1.shape[0], monitor):
        U = GridRoughPath(times, l1[k], l2[k])
        if F.speed(U, p) > M * (1 + 1e-12):
            return f"field speed at node {k} exceeds M={M!r}"
        if dist_p(U, X0, p) > r * (1 + 1e-12):
            return f"state at node {k} left the ball of radius {r!r}"
    return None


def _node_residuals(F: VectorField, sol: FlowSolution, monitor: int | None) -> tuple[tuple[float, float, float], ...]:
    if sol.n_nodes < 2:
        return ()
    out = []
    for k in _monitor_indices(sol.n_nodes - 1, monitor):
        tau = float(sol.taus[k])
        h = float(sol.taus[k + 1] - sol.taus[k]) / 8
        out.append((tau, h, residual(F, sol, tau, h, sol.q)))
    return tuple(out)


def euler_epsilon_solution(
    F: VectorField,
    X0: GridRoughPath,
    r: float,
    eps: float,
    p: float,
    q: float | None = None,
    *,
    safety: float = 1.5,
    max_inflations: int = 6,
    horizon_cap: float = 1.0,
    tangent_lipschitz: float | None = None,
    dyadic_steps: bool = False,
    min_steps: int = 1,
    M: float | None = None,
    monitor: int | None = 64,
    max_steps: int = 1 << 20,
    seed: int = 0,
) -> FlowSolution:
    """Euler epsilon-solution on ``[0, alpha]`` with ``alpha = r / (2M)``.

    ``M`` bounds the field speed on the visited states: it is ``safety`` times the
    speed at ``X0`` unless given.  After the run the speed and the ball
    condition are checked on up to ``monitor`` nodes (all nodes when ``None``);
    on failure the factor is doubled and the run repeated.
    """
    if eps <= 0 or r <= 0:
        raise InputError("eps and r must be positive")
    q = p + 0.5 if q is None else q
    if not (p < q <= 4.0):
        raise InputError(f"need p < q <= 4, got p={p}, q={q}")
    C1 = tangent_lipschitz if tangent_lipschitz is not None else _tangent_lipschitz(F, X0, p, q, seed)
    speed0 = F.speed(X0, p)
    factor = safety
    for _ in range(max_inflations + 1):
        bound = M if M is not None else factor * speed0
        if bound == 0.0:
            alpha = horizon_cap
            n_steps = _steps_for(alpha, 1.0, dyadic_steps, min_steps)
        else:
            alpha = r / (2.0 * bound)
            n_steps = _steps_for(alpha, min(1.0, eps / ((C1 + 2.0) * bound)), dyadic_steps, min_steps)
        if n_steps > max_steps:
            raise FlowError(f"{n_steps} Euler steps needed, above the limit {max_steps}")
        taus = np.linspace(0.0, alpha, n_steps + 1)
        l1, l2 = euler_path(F, X0, taus)
        problem = _certify(F, X0, l1, l2, X0.times, bound, r, p, monitor)
        if problem is None:
            sol = FlowSolution(F, taus, X0.times, l1, l2, float(eps), float(bound), float(alpha), float(r),
                               float(p), float(q), meta={"tangent_lipschitz": C1, "steps": n_steps})
            return replace(sol, residual_log=_node_residuals(F, sol, monitor))
        if M is not None:
            raise FlowError(problem)
        factor *= 2.0
    raise FlowError(f"{problem} after {max_inflations} inflations of the speed bound")


def residual(F: VectorField, U: FlowSolution, tau: float, h: float, q: float) -> float:
    """``d_q(U(tau + h), V_{F(U(tau))}(h)) / h``."""
    if h <= 0:
        raise InputError("h must be positive")
    end = float(U.taus[-1])
    if tau < 0 or tau + h > end * (1 + 1e-12):
        raise InputError(f"[tau, tau + h] = [{tau!r}, {tau + h!r}] leaves [0, {end!r}]")
    start = U.state_at(tau)
    predicted = variational_curve(F(start), h)
    return dist_p(U.state_at(min(tau + h, end)), predicted, q) / h


def sup_gap(a: FlowSolution, b: FlowSolution, q: float) -> float:
    """``sup_tau d_q(a(tau), b(tau))`` over the nodes of the coarser run (grids must nest)."""
    if abs(a.alpha - b.alpha) > 1e-12 * max(1.0, a.alpha):
        raise InputError("runs cover different intervals")
    coarse, fine = (a, b) if a.n_nodes <= b.n_nodes else (b, a)
    ratio, rem = divmod(fine.n_nodes - 1, coarse.n_nodes - 1)
    if rem:
        raise InputError("node grids do not nest")
    return max(dist_p(coarse.state(k), fine.state(k * ratio), q) for k in range(coarse.n_nodes))


def solve_local(
    F: VectorField,
    X0: GridRoughPath,
    r: float,
    schedule: Sequence[float],
    p: float,
    q: float | None = None,
    *,
    safety: float = 1.5,
    max_inflations: int = 6,
    cauchy_tol: float = 1e-10,
    horizon_cap: float = 1.0,
    monitor: int | None = 64,
    seed: int = 0,
) -> FlowSolution:
    """Euler runs for a decreasing schedule of epsilons on nested dyadic node grids.

    All runs share ``M`` and ``alpha``.  Consecutive runs are compared in
    sup-over-nodes ``d_q``; the gaps must not increase (up to ``cauchy_tol``).
    Returns the finest run with the comparison table in ``cauchy_log``.
    """
    eps_list = [float(e) for e in schedule]
    if not eps_list or any(e <= 0 for e in eps_list) or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise InputError("schedule must be positive and strictly decreasing")
    q = p + 0.5 if q is None else q
    C1 = _tangent_lipschitz(F, X0, p, q, seed)
    speed0 = F.speed(X0, p)
    factor = safety
    for _ in range(max_inflations + 1):
        M = factor * speed0
        runs: list[FlowSolution] = []
        steps = 1
        try:
            for e in eps_list:
                run = euler_epsilon_solution(
                    F, X0, r, e, p, q, M=M, tangent_lipschitz=C1, dyadic_steps=True, min_steps=steps,
                    horizon_cap=horizon_cap, monitor=monitor, seed=seed,
                )
                steps = run.n_nodes - 1
                runs.append(run)
        except FlowError:
            factor *= 2.0
            continue
        break
    else:
        raise FlowError("could not find a speed bound that keeps every run inside the ball")
    gaps = [sup_gap(a, b, q) for a, b in zip(runs, runs[1:])]
    log = tuple(
        {"epsilon": run.eps, "sup_dq_gap_to_next": gaps[j] if j < len(gaps) else None,
         "alpha": run.alpha, "M": run.M, "steps": run.n_nodes - 1}
        for j, run in enumerate(runs)
    )
    for j in range(1, len(gaps)):
        if gaps[j] > gaps[j - 1] + cauchy_tol:
            probe = lipschitz_probe(F, probe_pairs(X0, seed), p, q)
            raise FlowError(
                f"runs are not Cauchy: gap {gaps[j]:.3e} after {gaps[j - 1]:.3e}; "
                f"empirical tangent Lipschitz ratio {probe.ratio_p:.4g}"
            )
    return replace(runs[-1], cauchy_log=log)


@dataclass
class GlobalBounds:
    C5: float
    C6: float
    series: float
    chunk_bound: float
    corrected_bound: float


def global_bounds(F: VectorField, X0: GridRoughPath, p: float) -> GlobalBounds:
    """Constants of the interval-chaining argument with radii ``r_i = e^i``.

    ``chunk_bound`` is ``1 / (2 C5 C + C6 / e)``; ``corrected_bound`` is
    ``1 / (2 C5 e / (e - 1) + 2 C6 / e)``, which follows from ``M_n <= C5 sum r_i + C6``.
    """
    c = F.constants
    if not c.has_global():
        raise InputError("global runs need declared constants z_p, phi_p, z_q and phi_q")
    C5 = max(1.0, c.z_p + c.phi_p)
    rep = F(X0)
    C6 = max(tangent_norm(rep, p), dist_p(rep.Z.path, trivial_path(X0.times, 2 * X0.dim), p))
    series = 1.0 / (math.e - 1.0)
    return GlobalBounds(
        C5, C6, series,
        1.0 / (2.0 * C5 * series + C6 / math.e),
        1.0 / (2.0 * C5 * math.e / (math.e - 1.0) + 2.0 * C6 / math.e),
    )


def _phi_distance(a: Phi, b: Phi, exponent: float) -> float:
    return variation_norm(lambda j: _norms(a.increments_to(j) - b.increments_to(j)), a.n_points, exponent)


def _check_global_lipschitz(F: VectorField, X: GridRoughPath, Y: GridRoughPath, p: float, q: float) -> str | None:
    c = F.constants
    FX, FY = F(X), F(Y)
    for expo, cz, cphi in ((p, c.z_p, c.phi_p), (q, c.z_q, c.phi_q)):
        base = dist_p(X, Y, expo)
        if base == 0.0:
            continue
        ratio_z = dist_p(FX.Z.path, FY.Z.path, expo) / base
        ratio_phi = _phi_distance(FX.phi, FY.phi, expo / 2) / base
        if ratio_z > cz * (1 + 1e-9) + 1e-12 or ratio_phi > cphi * (1 + 1e-9) + 1e-12:
            return (f"declared constants violated at exponent {expo}: Z ratio {ratio_z:.4g} "
                    f"(declared {cz}), phi ratio {ratio_phi:.4g} (declared {cphi})")
    return None


def solve_global(
    F: VectorField,
    X0: GridRoughPath,
    horizon: float,
    p: float,
    q: float | None = None,
    eps: float = 0.1,
    *,
    safety: float = 1.5,
    alpha_cap: float = 1.0,
    monitor: int | None = 64,
    max_chunks: int = 64,
) -> FlowSolution:
    """Chain local Euler solutions on balls of radius ``e^i`` until ``horizon`` is covered.

    Each chunk starts from the previous chunk's terminal state.  The declared
    global constants are checked between the two ends of every chunk.
    """
    if horizon <= 0:
        raise InputError("horizon must be positive")
    q = p + 0.5 if q is None else q
    bounds = global_bounds(F, X0, p)
    C1 = F.constants.tangent_p if F.constants.tangent_p is not None else bounds.C5
    taus, l1s, l2s = [np.zeros(1)], [X0.level1[None]], [X0.level2[None]]
    junctions, alphas, Ms, residuals = [], [], [], []
    gaps: list[float] = []
    start, elapsed, i = X0, 0.0, 0
    while elapsed < horizon:
        i += 1
        if i > max_chunks:
            raise FlowError(f"horizon not reached after {max_chunks} chunks")
        chunk = euler_epsilon_solution(
            F, start, math.e**i, eps, p, q, safety=safety, horizon_cap=alpha_cap,
            tangent_lipschitz=C1, monitor=monitor,
        )
        if i > 1:
            gaps.append(dist_p(GridRoughPath(X0.times, l1s[-1][-1], l2s[-1][-1]), chunk.initial, q))
        problem = _check_global_lipschitz(F, start, chunk.terminal, p, q)
        if problem is not None:
            raise FlowError(f"chunk {i}: {problem}")
        junctions.append(sum(t.shape[0] for t in taus) - 1)
        taus.append(elapsed + chunk.taus[1:])
        l1s.append(chunk.level1[1:])
        l2s.append(chunk.level2[1:])
        residuals.extend((elapsed + t, h, res) for t, h, res in chunk.residual_log)
        alphas.append(chunk.alpha)
        Ms.append(chunk.M)
        elapsed += chunk.alpha
        start = chunk.terminal
    tau_all = np.concatenate(taus)
    return FlowSolution(
        F, tau_all, X0.times, np.concatenate(l1s), np.concatenate(l2s), float(eps), max(Ms), float(tau_all[-1]),
        math.e**i, float(p), float(q), residual_log=tuple(residuals), junctions=tuple(junctions),
        chunk_alphas=tuple(alphas), chunk_Ms=tuple(Ms),
        meta={"C5": bounds.C5, "C6": bounds.C6, "chunk_bound": bounds.chunk_bound,
              "corrected_bound": bounds.corrected_bound, "junction_gaps": gaps},
    )


@dataclass
class SolutionChecks:
    """Worst observed values of the solution invariants; each ``*_ratio`` must stay <= 1."""

    chen: float
    ball_ratio: float
    lipschitz_ratio: float
    residual_ratio: float
    junction_gap: float

    def passed(self, chen_tol: float = 1e-12) -> bool:
        slack = 1 + 1e-9
        return (self.chen < chen_tol and self.ball_ratio <= slack and self.lipschitz_ratio <= slack
                and self.residual_ratio <= slack and self.junction_gap == 0.0)

    def as_dict(self) -> dict[str, float]:
        return {"chen": self.chen, "ball_ratio": self.ball_ratio, "lipschitz_ratio": self.lipschitz_ratio,
                "residual_ratio": self.residual_ratio, "junction_gap": self.junction_gap}


def _segments(sol: FlowSolution) -> list[tuple[int, int, float, float, float]]:
    """``(first node, last node, M, alpha, r)`` for each locally solved chunk."""
    if not sol.junctions:
        return [(0, sol.n_nodes - 1, sol.M, sol.alpha, sol.r)]
    bounds = list(sol.junctions) + [sol.n_nodes - 1]
    return [(bounds[i], bounds[i + 1], sol.chunk_Ms[i], sol.chunk_alphas[i], math.e ** (i + 1))
            for i in range(len(sol.junctions))]


def verify_solution(
    sol: FlowSolution,
    *,
    h_fractions: Sequence[float] = tuple(2.0**-k for k in range(3, 9)),
    pair_budget: int | None = 2000,
    seed: int = 0,
) -> SolutionChecks:
    """Check Chen's identity, ball containment, the Lipschitz-in-time bound and node residuals.

    Ball and Lipschitz bounds are measured chunk by chunk.  Residuals use
    ``h = f * dtau`` for each fraction ``f``.  With ``pair_budget=None`` every
    node pair enters the Lipschitz check.
    """
    from .roughpath import chen_residual

    rng = np.random.default_rng(seed)
    chen = max(chen_residual(sol.state(k), max_triples=500, seed=seed) for k in _monitor_indices(sol.n_nodes, 32))
    ball = lip = res = 0.0
    for first, last, M, alpha, r in _segments(sol):
        X0 = sol.state(first)
        t0 = float(sol.taus[first])
        for k in range(first, last + 1):
            d = dist_p(sol.state(k), X0, sol.p)
            allowed = min(2.0 * M * (float(sol.taus[k]) - t0), r)
            if d > 0:
                ball = max(ball, d / allowed if allowed > 0 else math.inf)
        nodes = np.arange(first, last + 1)
        pairs = [(int(a), int(b)) for i, a in enumerate(nodes) for b in nodes[i + 1:]]
        if pair_budget is not None and len(pairs) > pair_budget:
            chain = list(zip(nodes[:-1].tolist(), nodes[1:].tolist()))
            extra = rng.choice(len(pairs), size=pair_budget - len(chain), replace=False) if pair_budget > len(chain) else []
            pairs = chain + [pairs[i] for i in extra]
        lip_const = (1.0 + 2.0 * alpha) * M
        for a, b in pairs:
            d = dist_p(sol.state(a), sol.state(b), sol.p)
            if d > 0:
                allowed = lip_const * float(sol.taus[b] - sol.taus[a])
                lip = max(lip, d / allowed if allowed > 0 else math.inf)
        for k in range(first, last):
            dtau = float(sol.taus[k + 1] - sol.taus[k])
            for f in h_fractions:
                h = f * dtau
                value = residual(sol.field, sol, float(sol.taus[k]), h, sol.q)
                if value > 0:
                    res = max(res, value / (sol.eps + 2.0 * h * M))
    gap = max(sol.meta.get("junction_gaps", [0.0]), default=0.0)
    return SolutionChecks(chen, ball, lip, res, gap)
