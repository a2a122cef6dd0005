"""Offline solvers for max f(S) s.t. S within a small ground set, |S| <= k."""
from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Iterable

import numpy as np

from .errors import CapacityError, InputError
from .objectives import ValueOracle

BRUTE_FORCE_MAX_WORK = 5_000_000
_CHUNK = 1 << 15


def brute_force_work(n: int, k: int) -> int:
    return sum(math.comb(n, j) for j in range(min(k, n) + 1))


@lru_cache(maxsize=64)
def _combo_members(s: int, k: int) -> tuple[np.ndarray, tuple[tuple[int, ...], ...]]:
    combos = tuple(itertools.chain.from_iterable(
        itertools.combinations(range(s), j) for j in range(min(k, s) + 1)))
    members = np.zeros((len(combos), s), dtype=bool)
    for r, c in enumerate(combos):
        members[r, list(c)] = True
    members.setflags(write=False)
    return members, combos


def brute_force(oracle: ValueOracle, ground: Iterable[int], k: int,
                max_work: int = BRUTE_FORCE_MAX_WORK) -> frozenset:
    """Exact argmax over all subsets of ``ground`` of size <= k.

    Ties are broken toward the lexicographically smallest sorted id tuple.
    """
    if k < 0:
        raise InputError("k must be >= 0")
    ids = sorted(set(int(u) for u in ground))
    work = brute_force_work(len(ids), k)
    if work > max_work:
        raise CapacityError(f"brute force over {len(ids)} elements with k={k} needs {work} "
                            f"evaluations (cap {max_work})")
    if work <= _CHUNK:
        members, combos = _combo_members(len(ids), k)
        vals = oracle.batch(ids, members)
        top = float(vals.max())
        tol = 1e-12 * max(1.0, abs(top))
        # positions follow sorted ids, so position tuples order like id tuples
        first = min(combos[r] for r in np.flatnonzero(vals >= top - tol))
        return frozenset(ids[j] for j in first)
    pos = {u: j for j, u in enumerate(ids)}
    best_val = -math.inf
    best_sets: list[tuple[int, ...]] = []
    combos = itertools.chain.from_iterable(
        itertools.combinations(ids, j) for j in range(min(k, len(ids)) + 1))
    while True:
        chunk = list(itertools.islice(combos, _CHUNK))
        if not chunk:
            break
        members = np.zeros((len(chunk), len(ids)), dtype=bool)
        for r, c in enumerate(chunk):
            members[r, [pos[u] for u in c]] = True
        vals = oracle.batch(ids, members)
        top = float(vals.max())
        tol = 1e-12 * max(1.0, abs(max(top, best_val)))
        if top > best_val + tol:
            best_sets = []
        best_val = max(best_val, top)
        for r in np.flatnonzero(vals >= best_val - tol):
            best_sets.append(chunk[r])
    return frozenset(min(best_sets))


def random_greedy(oracle: ValueOracle, ground: Iterable[int], k: int,
                  rng: np.random.Generator) -> frozenset:
    """Random Greedy for non-monotone objectives.

    Each of k rounds ranks the remaining elements by marginal gain against k
    zero-gain dummies, and adds one of the top k uniformly at random (a
    dummy adds nothing).
    """
    if k < 0:
        raise InputError("k must be >= 0")
    remaining = sorted(set(int(u) for u in ground))
    S: list[int] = []
    for _ in range(k):
        if remaining:
            cols = S + remaining
            members = np.zeros((len(remaining) + 1, len(cols)), dtype=bool)
            members[:, :len(S)] = True
            members[np.arange(1, len(remaining) + 1), len(S) + np.arange(len(remaining))] = True
            vals = oracle.batch(cols, members)
            gains = vals[1:] - vals[0]
        else:
            gains = np.zeros(0)
        # reals first in id order, then dummies; stable sort keeps that order on ties
        scores = np.concatenate([gains, np.zeros(k)])
        top = np.argsort(-scores, kind="stable")[:k]
        pick = int(top[rng.integers(k)])
        if pick < len(remaining):
            S.append(remaining.pop(pick))
    return frozenset(S)
