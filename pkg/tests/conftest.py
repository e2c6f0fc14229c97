import itertools

import numpy as np
import pytest

from hlkit import MetricMeasureSpace

# criterion label -> list of (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def record(label, passed, detail=""):
    ACCEPTANCE.setdefault(label, []).append((bool(passed), detail))


def brute_maximal(space, f, x):
    """Sup over every radius of the ball average, by direct enumeration."""
    d = space.distances_from(x)
    a = np.abs(np.asarray(f, dtype=float))
    best = -np.inf
    for r in np.unique(d):
        # open ball closing just above r: every point at distance <= r
        m = d <= r
        best = max(best, float((space.weights[m] * a[m]).sum() / space.weights[m].sum()))
    return best


def subsets(n):
    for k in range(n + 1):
        yield from itertools.combinations(range(n), k)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def line3():
    return MetricMeasureSpace.from_points([[0.0], [1.0], [2.0]])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0])):
        results = ACCEPTANCE[label]
        ok = all(p for p, _ in results)
        detail = "; ".join(d for _, d in results if d)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")
