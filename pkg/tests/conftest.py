import itertools

import numpy as np
import pytest

from roughflow.roughpath import GridRoughPath, canonical_lift


def random_lift(rng, n_seg=None, dim=None, scale=1.0):
    n_seg = n_seg or int(rng.integers(1, 65))
    dim = dim or int(rng.integers(1, 5))
    times = np.concatenate([[0.0], np.cumsum(rng.uniform(0.2, 1.0, n_seg))])
    points = np.cumsum(rng.normal(scale=scale, size=(n_seg + 1, dim)), axis=0)
    return canonical_lift(times, points)


def brute_force_pvar(X: GridRoughPath, p: float, level: int) -> float:
    """Maximize over every partition of the grid by enumeration."""
    n = X.n_points
    best = 0.0
    interior = range(1, n - 1)
    for r in range(n - 1):
        for cut in itertools.combinations(interior, r):
            pts = (0, *cut, n - 1)
            total = 0.0
            for a, b in zip(pts, pts[1:]):
                inc = X.increment(a, b)
                v = inc.level1 if level == 1 else inc.level2
                total += float(np.linalg.norm(v)) ** (p / level)
            best = max(best, total)
    return best ** (level / p)


def riemann_level2(times, points, per_segment=2000):
    """Iterated integrals of a piecewise-linear path by midpoint sums on a fine mesh."""
    t = np.asarray(times, float)
    x = np.asarray(points, float)
    fine_t = np.concatenate([np.linspace(t[k], t[k + 1], per_segment, endpoint=False) for k in range(len(t) - 1)]
                            + [t[-1:]])
    fine = np.stack([np.interp(fine_t, t, x[:, c]) for c in range(x.shape[1])], axis=1)
    dx = np.diff(fine, axis=0)
    mid = 0.5 * (fine[:-1] + fine[1:]) - fine[0]
    return np.einsum("ki,kj->ij", mid, dx)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record_criterion():
    """Record and print a one-line verdict for an acceptance criterion."""

    def record(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
