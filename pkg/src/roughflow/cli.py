"""Command-line front end.

Exit status is 0 when every check passes, 1 for bad input and 2 when a
verification fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any

import numpy as np

from . import extension as ext
from .config import RunConfig
from .errors import InputError, VerificationError
from .flow import (
    FlowSolution,
    VectorField,
    dilation_field,
    lipschitz_probe,
    probe_pairs,
    solve_global,
    solve_local,
    verify_solution,
    young_cross_field,
    zero_field,
)
from .io import read_csv_path, read_path_json, write_path_json
from .roughpath import (
    GridRoughPath,
    canonical_lift,
    chen_residual,
    dist_p,
    p_variation,
    q_bound_constant,
)

EXIT_OK, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2


def _emit(obj: dict[str, Any]) -> None:
    print(json.dumps(obj, indent=2, allow_nan=True))


def _config(args: argparse.Namespace) -> RunConfig:
    overrides = {
        "p": args.p,
        "q": args.q,
        "chen_tol": args.chen_tol,
        "depth": getattr(args, "depth", None),
        "c0": getattr(args, "c0", None),
        "schedule": getattr(args, "schedule", None),
        "r": getattr(args, "r", None),
        "horizon": getattr(args, "horizon", None),
        "seed": args.seed,
        "output_dir": getattr(args, "out_dir", None),
    }
    return RunConfig.from_sources(args.config, overrides)


def _load_path(path: str) -> GridRoughPath:
    if path.endswith(".json"):
        return read_path_json(path)
    times, points = read_csv_path(path)
    return canonical_lift(times, points)


def _summary(X: GridRoughPath, p: float) -> dict[str, float]:
    return {
        "chen_residual": chen_residual(X, max_triples=20000),
        "p_variation_level1": p_variation(X, p, 1),
        "p_variation_level2": p_variation(X, p, 2),
    }


def cmd_lift(args: argparse.Namespace) -> int:
    cfg = _config(args)
    times, points = read_csv_path(args.csv)
    X = canonical_lift(times, points)
    out = Path(args.output) if args.output else Path(args.csv).with_suffix(".json")
    write_path_json(X, out)
    report = {"output": str(out), **_summary(X, cfg.p)}
    _emit(report)
    return EXIT_OK if report["chen_residual"] < cfg.chen_tol else EXIT_VERIFY


def cmd_pvar(args: argparse.Namespace) -> int:
    cfg = _config(args)
    _emit(_summary(_load_path(args.path), cfg.p))
    return EXIT_OK


def cmd_chen_check(args: argparse.Namespace) -> int:
    cfg = _config(args)
    X = _load_path(args.path)
    res = chen_residual(X, max_triples=args.max_triples)
    _emit({"chen_residual": res, "tolerance": cfg.chen_tol, "verdict": "PASS" if res < cfg.chen_tol else "FAIL"})
    return EXIT_OK if res < cfg.chen_tol else EXIT_VERIFY


def cmd_dist(args: argparse.Namespace) -> int:
    cfg = _config(args)
    X, Y = _load_path(args.first), _load_path(args.second)
    if X.dim != Y.dim or not X.same_grid(Y):
        raise InputError("paths must share dimension and grid")
    dp, dq = dist_p(X, Y, cfg.p), dist_p(X, Y, cfg.q)
    C = q_bound_constant(X, Y, cfg.p, cfg.q)
    bound = C * dp ** (cfg.p / cfg.q)
    ok = dq <= bound * (1 + 1e-12) + 1e-15
    _emit({"d_p": dp, "d_q": dq, "constant": C, "bound": bound, "verdict": "PASS" if ok else "FAIL"})
    return EXIT_OK if ok else EXIT_VERIFY


def _family(args: argparse.Namespace, cfg: RunConfig) -> ext.ParametricFamily:
    spec, declared = args.family, args.holder_constant
    if spec == "colinear":
        fam = ext.colinear_family(args.direction or [1.0, 2.0], cfg.depth, cfg.p)
    elif spec == "scaled-lift":
        t, pts = ext.default_lift_points(cfg.depth)
        fam = ext.scaled_lift_family(t, pts, cfg.p)
    elif spec.startswith("file:"):
        return ext.directory_family(spec[len("file:"):], cfg.p, holder_constant=declared)
    else:
        raise InputError(f"unknown family {spec!r}; use colinear, scaled-lift or file:<dir>")
    return fam if declared is None else replace(fam, holder_constant=declared, _cache={})


def _family_params(fam: ext.ParametricFamily, eps: float, delta: float) -> list[float]:
    """Parameters used for the family check and the Lipschitz grid (at most five)."""
    if fam.params is not None:
        return list(fam.params[:5])
    return sorted({eps, delta, 0.0, 0.5, 1.0})[:5]


def cmd_extend(args: argparse.Namespace) -> int:
    cfg = _config(args)
    fam = _family(args, cfg)
    params = _family_params(fam, args.eps, args.delta)
    report = ext.check_family_condition(fam, params, seed=cfg.seed)
    result: dict[str, Any] = {
        "family": fam.name,
        "holder_constant": fam.holder_constant,
        "holder_ratio": report.holder_ratio,
        "lipschitz_ratio": report.lipschitz_ratio,
        "family_condition": "PASS" if report.ok else "FAIL",
    }
    if not report.ok:
        result["holder_violations"] = report.holder_violations[:5]
        result["lipschitz_violations"] = report.lipschitz_violations[:5]
        result["control_violations"] = report.control_violations[:5]
        _emit(result)
        return EXIT_VERIFY
    area = ext.build_dyadic_area(fam, args.eps, args.delta, cfg.depth, cfg.c0)
    out = Path(args.output) if args.output else Path(cfg.output_dir) / "area.json"
    ext.area_json_dump(area, out)
    rng = np.random.default_rng(cfg.seed)
    top = 2**cfg.depth
    triples = np.sort(rng.choice(top + 1, size=(2000, 3)), axis=1)
    triples = triples[(triples[:, 0] < triples[:, 1]) & (triples[:, 1] < triples[:, 2])]
    residual = max(area.halving_residual(), area.composition_residual(triples))
    lip_ratio = ext.area_lipschitz_ratio(fam, params, min(cfg.depth, 8), cfg.c0)
    ok = residual < cfg.chen_tol and lip_ratio <= 1.0
    result.update({
        "output": str(out),
        "composition_residual": residual,
        "area_lipschitz_ratio": lip_ratio,
        "area_lipschitz_constant": ext.area_lipschitz_constant(fam),
        "verdict": "PASS" if ok else "FAIL",
    })
    _emit(result)
    return EXIT_OK if ok else EXIT_VERIFY


def _parse_measure(text: str) -> list[tuple[float, float]]:
    atoms = []
    for item in text.split(","):
        try:
            e, w = item.split(":")
            atoms.append((float(e), float(w)))
        except ValueError as exc:
            raise InputError(f"measure atoms must read eps:weight, got {item!r}") from exc
    return atoms


def cmd_integrate(args: argparse.Namespace) -> int:
    cfg = _config(args)
    fam = _family(args, cfg)
    X = ext.integrate_family(fam, _parse_measure(args.measure), cfg.depth, cfg.c0,
                             self_pairs=args.self_pairs)
    out = Path(args.output) if args.output else Path(cfg.output_dir) / "integrated.json"
    write_path_json(X, out)
    res = chen_residual(X, max_triples=20000, seed=cfg.seed)
    _emit({"output": str(out), "chen_residual": res, "verdict": "PASS" if res < cfg.chen_tol else "FAIL"})
    return EXIT_OK if res < cfg.chen_tol else EXIT_VERIFY


def _field(spec: str, X0: GridRoughPath) -> VectorField:
    if spec == "zero":
        return zero_field()
    if spec.startswith("young:"):
        times, points = read_csv_path(spec[len("young:"):])
        grid = times - times[0]
        if not np.array_equal(grid, X0.times):
            raise InputError("direction CSV and initial path live on different grids")
        return young_cross_field(points, times=grid)
    if spec.startswith("dilation:"):
        try:
            rate = float(spec[len("dilation:"):])
        except ValueError as exc:
            raise InputError(f"bad dilation rate in {spec!r}") from exc
        return dilation_field(rate)
    raise InputError(f"unknown field {spec!r}; use zero, young:<h.csv> or dilation:<rate>")


def _node_rows(sol: FlowSolution, X0: GridRoughPath, level: int) -> list[list[str]]:
    from .flow import residual

    rows = []
    chunk_of = np.searchsorted(np.array(sol.junctions[1:] or [sol.n_nodes]), np.arange(sol.n_nodes), side="right")
    for k in range(sol.n_nodes):
        tau = float(sol.taus[k])
        if k + 1 < sol.n_nodes:
            res = repr(residual(sol.field, sol, tau, float(sol.taus[k + 1] - tau) / 8, sol.q))
        else:
            res = ""
        lvl = int(chunk_of[k]) if sol.junctions else level
        rows.append([repr(tau), str(lvl), repr(dist_p(sol.state(k), X0, sol.p)), res])
    return rows


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def cmd_flow(args: argparse.Namespace) -> int:
    cfg = _config(args)
    X0 = _load_path(args.init)
    F = _field(args.field, X0)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows: list[list[str]] = []
    summary: dict[str, Any] = {"field": F.name, "p": cfg.p, "q": cfg.q}
    if args.global_run:
        sol = solve_global(F, X0, cfg.horizon, cfg.p, cfg.q, cfg.schedule[-1], safety=cfg.safety,
                           alpha_cap=cfg.horizon)
        rows = _node_rows(sol, X0, 0)
        alphas = list(sol.chunk_alphas)
        summary.update({"chunks": len(alphas), "chunk_alphas": alphas, **sol.meta,
                        "chunk_bound_holds": all(a >= sol.meta["chunk_bound"] for a in alphas),
                        "corrected_bound_holds": all(a >= sol.meta["corrected_bound"] for a in alphas)})
        table = [[repr(sol.eps), "", repr(a), repr(M)] for a, M in zip(sol.chunk_alphas, sol.chunk_Ms)]
    else:
        sol = solve_local(F, X0, cfg.r, cfg.schedule, cfg.p, cfg.q, safety=cfg.safety,
                          cauchy_tol=cfg.cauchy_tol, horizon_cap=cfg.horizon, seed=cfg.seed)
        table = [[repr(e["epsilon"]), "" if e["sup_dq_gap_to_next"] is None else repr(e["sup_dq_gap_to_next"]),
                  repr(e["alpha"]), repr(e["M"])] for e in sol.cauchy_log]
        rows = _node_rows(sol, X0, len(cfg.schedule) - 1)
        summary["cauchy_log"] = list(sol.cauchy_log)
    checks = verify_solution(sol, seed=cfg.seed)
    _write_csv(out / "flow.csv", ["tau", "level", "dist_to_init", "residual"], rows)
    _write_csv(out / "convergence.csv", ["epsilon", "sup_dq_gap_to_next", "alpha", "M"], table)
    _write_csv(out / "residuals.csv", ["tau", "h", "residual"],
               [[repr(t), repr(h), repr(r)] for t, h, r in sol.residual_log])
    write_path_json(sol.terminal, out / "terminal.json")
    ok = checks.passed(cfg.chen_tol) and (not args.global_run or summary["chunk_bound_holds"])
    summary.update({"checks": checks.as_dict(), "verdict": "PASS" if ok else "FAIL", "output_dir": str(out)})
    _emit(summary)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_probe(args: argparse.Namespace) -> int:
    cfg = _config(args)
    X0 = _load_path(args.init)
    F = _field(args.field, X0)
    rep = lipschitz_probe(F, probe_pairs(X0, cfg.seed), cfg.p, cfg.q)
    _emit({
        "ratio_p": rep.ratio_p, "ratio_q": rep.ratio_q,
        "direction_ratio_p": rep.direction_ratio_p, "direction_ratio_q": rep.direction_ratio_q,
        "declared_p": rep.declared_p, "declared_q": rep.declared_q,
        "pairs": rep.n_pairs, "verdict": "FAIL" if rep.flagged else "PASS",
    })
    return EXIT_VERIFY if rep.flagged else EXIT_OK


def _schedule(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"schedule must be comma-separated numbers: {exc}") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--p", type=float)
    common.add_argument("--q", type=float)
    common.add_argument("--chen-tol", dest="chen_tol", type=float)
    common.add_argument("--seed", type=int)

    family = argparse.ArgumentParser(add_help=False)
    family.add_argument("--family", required=True, help="colinear, scaled-lift or file:<dir>")
    family.add_argument("--direction", type=_schedule, help="colinear direction, comma separated")
    family.add_argument("--holder-constant", dest="holder_constant", type=float,
                        help="declared family constant (fitted from the files when omitted)")
    family.add_argument("--depth", type=int)
    family.add_argument("--c0", type=float)
    family.add_argument("-o", "--output")
    family.add_argument("--out-dir", dest="out_dir")

    parser = _Parser(prog="roughflow", description="Rough paths, tangents and flows.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lift", parents=[common], help="lift a CSV path to a rough path")
    p.add_argument("csv")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("pvar", parents=[common], help="p-variation of each level")
    p.add_argument("path")
    p.set_defaults(func=cmd_pvar)

    p = sub.add_parser("dist", parents=[common], help="p- and q-variation distances")
    p.add_argument("first")
    p.add_argument("second")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("chen-check", parents=[common], help="Chen residual of a rough path")
    p.add_argument("path")
    p.add_argument("--max-triples", dest="max_triples", type=int)
    p.set_defaults(func=cmd_chen_check)

    p = sub.add_parser("extend", parents=[common, family], help="dyadic cross areas for a family")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("integrate", parents=[common, family], help="integrate a family against a measure")
    p.add_argument("--measure", required=True, help="eps:weight,eps:weight,...")
    p.add_argument("--self-pairs", dest="self_pairs", choices=["construction", "family"],
                   default="construction", help="level two used when an atom meets itself")
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("flow", parents=[common], help="solve a flow equation")
    p.add_argument("--init", required=True, help="initial path, CSV or rough-path JSON")
    p.add_argument("--field", required=True, help="zero, young:<h.csv> or dilation:<rate>")
    p.add_argument("--schedule", type=_schedule)
    p.add_argument("--r", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--global", dest="global_run", action="store_true")
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("probe-lipschitz", parents=[common], help="empirical Lipschitz ratios of a field")
    p.add_argument("--init", required=True)
    p.add_argument("--field", required=True)
    p.set_defaults(func=cmd_probe)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
