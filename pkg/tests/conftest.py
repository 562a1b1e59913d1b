import math

import numpy as np
import pytest

from equilab.analysis import ScoreGrid
from equilab.measures import StatisticDescriptor
from equilab.relationships import CalibratedLevel


def brute_force_dcor(xs, ys):
    """Definitional distance correlation, written as plain loops.

    Independent oracle for the kernel implementations: double-centered
    pairwise distance matrices, no vectorization shared with the library.
    """
    n = len(xs)
    a = [[abs(xs[i] - xs[j]) for j in range(n)] for i in range(n)]
    b = [[abs(ys[i] - ys[j]) for j in range(n)] for i in range(n)]

    def center(m):
        rm = [sum(row) / n for row in m]
        cm = [sum(m[i][j] for i in range(n)) / n for j in range(n)]
        g = sum(rm) / n
        return [[m[i][j] - rm[i] - cm[j] + g for j in range(n)]
                for i in range(n)]

    A, B = center(a), center(b)
    sab = sum(A[i][j] * B[i][j] for i in range(n) for j in range(n)) / n ** 2
    saa = sum(A[i][j] ** 2 for i in range(n) for j in range(n)) / n ** 2
    sbb = sum(B[i][j] ** 2 for i in range(n) for j in range(n)) / n ** 2
    if saa * sbb == 0:
        return 0.0
    return math.sqrt(max(sab, 0.0) / math.sqrt(saa * sbb))


def synthetic_grid(score_fn, targets, n_functions=2, R=100, n=50, seed=0,
                   stat_id="pearson_r2"):
    """Build a ScoreGrid whose cell (f, l, r) is score_fn(f, target, r).

    For exercising the interval/power machinery with known sampling
    distributions, bypassing sample generation.
    """
    targets = np.asarray(targets, dtype=float)
    R_ = R
    scores = np.empty((n_functions, len(targets), R_))
    for f in range(n_functions):
        for li, t in enumerate(targets):
            scores[f, li] = np.sort([score_fn(f, float(t), r)
                                     for r in range(R_)])
    levels = tuple(
        tuple(CalibratedLevel(float(t), math.inf if t == 0.0 else 1.0 - t,
                              float(t), 0.01) for t in targets)
        for _ in range(n_functions))
    return ScoreGrid(StatisticDescriptor(stat_id),
                     tuple(f"fn{f}" for f in range(n_functions)),
                     levels, scores, n, R_, seed,
                     "uniform-random", "y-only")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance reporting ----------------------------------------------------

ACCEPTANCE_LINES = []


def record_acceptance(num: int, passed: bool, detail: str):
    """One printed pass/fail line per acceptance criterion."""
    line = f"criterion {num}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
