"""Randomized swap rounding inside the cardinality polytope {x in [0,1]^N : |x|_1 <= k}.

Fractional coordinates are merged pairwise in increasing id order.  Each
merge moves mass between two coordinates along e_i - e_j so that at least
one of them becomes integral and both keep their expectation; F is convex
along these directions, so E[F] never drops.  A lone fractional coordinate
left at the end is rounded independently.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InfeasibleError, InvariantError
from .extensions import FractionalVector

ZERO_TOL = 1e-12


@dataclass
class MergeStep:
    i: int
    j: int
    before: tuple[float, float]
    after: tuple[float, float]
    prob: float
    survivor: int


@dataclass
class RoundingTrace:
    steps: list[MergeStep] = field(default_factory=list)
    final_coin: tuple[int, float] | None = None
    result: list[int] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _clean(x: FractionalVector, k: int) -> tuple[list[int], np.ndarray]:
    if x.l1 > k + 1e-9:
        raise InfeasibleError(f"|x|_1 = {x.l1} exceeds k = {k}")
    ids = x.support()
    vals = np.array([x[u] for u in ids], dtype=float)
    vals[vals < ZERO_TOL] = 0.0
    vals[vals > 1.0 - ZERO_TOL] = 1.0
    return ids, vals


def _snap(v: float) -> float:
    if v < ZERO_TOL:
        return 0.0
    if v > 1.0 - ZERO_TOL:
        return 1.0
    return v


def _merge_pair(a: float, b: float, r: float) -> tuple[float, float, float, bool]:
    """Merge fractional a (carry) and b; returns (new_a, new_b, prob_carry_wins, carry_won).

    a + b <= 1: the winner takes a + b, the loser drops to 0; carry wins w.p. a/(a+b).
    a + b > 1: the winner rises to 1, the loser keeps a + b - 1; carry wins w.p. (1-b)/(2-a-b).
    Both rules keep E[new_a] = a and E[new_b] = b.
    """
    s = a + b
    if s <= 1.0:
        prob = a / s
        big, small = s, 0.0
    else:
        prob = (1.0 - b) / (2.0 - s)
        big, small = 1.0, s - 1.0
    won = r < prob
    new_a, new_b = (big, small) if won else (small, big)
    return _snap(new_a), _snap(new_b), prob, won


def _merge_one(vals: list[float], ids: list[int], rng: np.random.Generator,
               trace: RoundingTrace) -> list[bool]:
    out = list(vals)
    carry = -1
    for j, b in enumerate(vals):
        if b <= 0.0 or b >= 1.0:
            continue
        if carry < 0:
            carry = j
            continue
        a = out[carry]
        new_a, new_b, prob, won = _merge_pair(a, b, rng.random())
        trace.steps.append(MergeStep(ids[carry], ids[j], (a, b), (new_a, new_b), prob,
                                     ids[carry] if won else ids[j]))
        out[carry], out[j] = new_a, new_b
        if not 0.0 < new_a < 1.0:
            carry = j if 0.0 < new_b < 1.0 else -1
    if carry >= 0:
        trace.final_coin = (ids[carry], out[carry])
        out[carry] = 1.0 if rng.random() < out[carry] else 0.0
    return [v >= 0.5 for v in out]


def _merge_scan(vals: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
    """Same scan as _merge_one, vectorized over ``size`` independent copies."""
    out = np.tile(vals, (size, 1))
    rows = np.arange(size)
    carry = np.full(size, -1, dtype=np.int64)
    for j, b in enumerate(vals):
        if b <= 0.0 or b >= 1.0:
            continue
        idle = carry < 0
        carry[idle] = j
        act = rows[~idle]
        if act.size == 0:
            continue
        ci = carry[act]
        a = out[act, ci]
        s = a + b
        low = s <= 1.0
        prob = np.where(low, a / s, (1.0 - b) / np.where(low, 1.0, 2.0 - s))
        won = rng.random(act.size) < prob
        big = np.where(low, s, 1.0)
        small = np.where(low, 0.0, s - 1.0)
        new_a = np.where(won, big, small)
        new_b = np.where(won, small, big)
        for arr in (new_a, new_b):
            arr[arr < ZERO_TOL] = 0.0
            arr[arr > 1.0 - ZERO_TOL] = 1.0
        out[act, ci] = new_a
        out[act, j] = new_b
        frac_a = (new_a > 0.0) & (new_a < 1.0)
        frac_b = (new_b > 0.0) & (new_b < 1.0)
        carry[act] = np.where(frac_a, ci, np.where(frac_b, j, -1))
    left = rows[carry >= 0]
    if left.size:
        ci = carry[left]
        out[left, ci] = (rng.random(left.size) < out[left, ci]).astype(float)
    return out >= 0.5


def swap_round(x: FractionalVector, k: int, rng: np.random.Generator) -> tuple[frozenset, RoundingTrace]:
    """Round x to a set S with |S| <= k and Pr[u in S] = x_u for every u."""
    ids, vals = _clean(x, k)
    trace = RoundingTrace()
    if not ids:
        return frozenset(), trace
    chosen = _merge_one(vals.tolist(), ids, rng, trace)
    S = frozenset(u for u, c in zip(ids, chosen) if c)
    if len(S) > k:
        raise InvariantError(f"rounded set of size {len(S)} exceeds k = {k}")
    trace.result = sorted(S)
    return S, trace


def swap_round_many(x: FractionalVector, k: int, rng: np.random.Generator,
                    size: int) -> tuple[list[int], np.ndarray]:
    """``size`` independent roundings at once: returns (support ids, membership matrix)."""
    ids, vals = _clean(x, k)
    if not ids:
        return ids, np.zeros((size, 0), dtype=bool)
    members = _merge_scan(vals, rng, size)
    if members.sum(axis=1).max() > k:
        raise InvariantError(f"a rounded set exceeds k = {k}")
    return ids, members
