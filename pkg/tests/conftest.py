"""Independent reference implementations used as test oracles.

Everything here is plain Python over frozensets and itertools, sharing no
code paths with the package beyond the oracles' single-set ``_value``.
"""
import itertools
import math

import numpy as np
import pytest

from semisieve.objectives import (CoverageOracle, CutOracle, random_coverage, random_cut)


def subsets(ids, max_size=None):
    ids = list(ids)
    top = len(ids) if max_size is None else min(max_size, len(ids))
    for r in range(top + 1):
        for c in itertools.combinations(ids, r):
            yield frozenset(c)


def coverage_value(weights, covers, S):
    covered = set()
    for u in S:
        covered.update(covers[u])
    return float(sum(weights[j] for j in covered))


def cut_value(edges, S):
    return float(sum(w for a, b, w in edges if (a in S) != (b in S)))


def ref_multilinear(f, x: dict) -> float:
    """Product-form sum over every subset of the nonzero coordinates."""
    ids = [u for u, v in x.items() if v > 0]
    total = 0.0
    for S in subsets(ids):
        prob = 1.0
        for u in ids:
            prob *= x[u] if u in S else 1.0 - x[u]
        total += prob * f(S)
    return total


def ref_lovasz(f, x: dict) -> float:
    """Integral of f over superlevel sets, evaluated at the midpoint of each constant piece."""
    cuts = sorted({0.0, 1.0} | {v for v in x.values() if 0 < v < 1})
    total = 0.0
    for a, b in zip(cuts, cuts[1:]):
        lam = (a + b) / 2
        total += (b - a) * f(frozenset(u for u, v in x.items() if v >= lam))
    return total


def ref_best_value(f, ids, k) -> float:
    return max(f(S) for S in subsets(ids, k))


def reference_grid(m, eps, k, c):
    """Values (1+eps)^h with m/(1+eps) <= (1+eps)^h <= mk/c, by scanning a wide window of h."""
    if m <= 0:
        return []
    base = 1 + eps
    center = int(math.log(m) / math.log(base))
    span = int(5 + math.log(2 * k / c) / math.log(base)) + 5
    return [base ** h for h in range(center - span, center + span + 1)
            if m / base <= base ** h <= m * k / c]


def fn(oracle):
    """Uncounted plain-callable view of an oracle."""
    return lambda S: oracle._value(frozenset(S))


def random_instance(rng, n, kind=None):
    kind = kind or ("coverage" if rng.random() < 0.5 else "cut")
    if kind == "coverage":
        inst = random_coverage(n, int(rng.integers(n, 2 * n + 1)), float(rng.uniform(0.15, 0.4)), rng)
        return CoverageOracle(inst.universe_weights, inst.covers)
    inst = random_cut(n, float(rng.uniform(0.25, 0.6)), rng)
    return CutOracle(n, inst.edges)


def random_point(rng, n, k=None, density=0.6):
    x = {u: float(rng.random()) for u in range(n) if rng.random() < density}
    if k is not None:
        s = sum(x.values())
        if s > k:
            x = {u: v * k / s for u, v in x.items()}
    return x


def mean_sem(values):
    a = np.asarray(values, dtype=float)
    if a.size < 2:
        return float(a.mean()), 0.0
    return float(a.mean()), float(a.std(ddof=1) / math.sqrt(a.size))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


# acceptance results, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
