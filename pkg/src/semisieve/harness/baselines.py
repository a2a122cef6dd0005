"""Reference algorithms the streaming variants are compared against."""
from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from ..objectives import ValueOracle


def baseline_greedy(oracle: ValueOracle, ground: Iterable[int], k: int) -> frozenset:
    """Offline greedy: up to k rounds, each adding the best element while its gain is positive."""
    remaining = sorted(set(int(u) for u in ground))
    S: list[int] = []
    for _ in range(k):
        if not remaining:
            break
        cols = S + remaining
        members = np.zeros((len(remaining) + 1, len(cols)), dtype=bool)
        members[:, :len(S)] = True
        members[np.arange(1, len(remaining) + 1), len(S) + np.arange(len(remaining))] = True
        vals = oracle.batch(cols, members)
        gains = vals[1:] - vals[0]
        best = int(np.argmax(gains))  # first max -> smallest id on ties
        if gains[best] <= 0:
            break
        S.append(remaining.pop(best))
    return frozenset(S)


def baseline_sieve_streaming(oracle: ValueOracle, stream: Iterable[int], k: int, eps: float,
                             stats: dict | None = None) -> frozenset:
    """Integral single-pass thresholding over guesses v in {(1+eps)^i : m <= v <= 2km}.

    Element e joins S_v when |S_v| < k and f(S_v + e) - f(S_v) >= (v/2 - f(S_v)) / (k - |S_v|).
    If ``stats`` is given it receives max_grid and max_stored (summed over guesses).
    """
    if stats is not None:
        stats.update(max_grid=0, max_stored=0)
    base = 1.0 + eps
    m = 0.0
    sols: dict[int, tuple[list[int], float]] = {}
    for e in stream:
        fe = oracle.value((e,))
        if fe > m:
            m = fe
            lo = math.ceil(math.log(m) / math.log(base))
            hi = math.floor(math.log(2 * k * m) / math.log(base))
            while base ** (lo - 1) >= m:
                lo -= 1
            while base ** lo < m:
                lo += 1
            while base ** (hi + 1) <= 2 * k * m:
                hi += 1
            while base ** hi > 2 * k * m:
                hi -= 1
            sols = {i: sols.get(i, ([], oracle.value(()))) for i in range(lo, hi + 1)}
        for i, (S, fS) in sols.items():
            if len(S) >= k:
                continue
            gain_val = oracle.value(S + [e])
            if gain_val - fS >= (base ** i / 2 - fS) / (k - len(S)):
                sols[i] = (S + [e], gain_val)
        if stats is not None:
            stats["max_grid"] = max(stats["max_grid"], len(sols))
            stats["max_stored"] = max(stats["max_stored"], sum(len(S) for S, _ in sols.values()))
    if not sols:
        return frozenset()
    best = max(sols.values(), key=lambda t: t[1])
    return frozenset(best[0])
