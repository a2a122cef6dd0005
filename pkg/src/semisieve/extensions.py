"""Multilinear and Lovasz extensions of a set function, exact and sampled.

All exact routines enumerate only the support of the fractional point, so
their cost is 2^|supp(x)| oracle calls; ``cap`` bounds the support size.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .errors import CapacityError, InputError
from .objectives import ValueOracle

EXACT_CAP = 20


class FractionalVector:
    """Sparse point of [0, 1]^N with a cached L1 norm."""

    __slots__ = ("_x", "_l1")

    def __init__(self, coords: Mapping[int, float] | None = None):
        self._x: dict[int, float] = {}
        self._l1 = 0.0
        if coords:
            for u, v in coords.items():
                self[u] = v

    @classmethod
    def indicator(cls, S: Iterable[int]) -> "FractionalVector":
        return cls({u: 1.0 for u in S})

    def __getitem__(self, u: int) -> float:
        return self._x.get(u, 0.0)

    def __setitem__(self, u: int, value: float) -> None:
        value = float(value)
        if not 0.0 <= value <= 1.0:
            raise InputError(f"coordinate {u} = {value} outside [0, 1]")
        u = int(u)
        self._l1 += value - self._x.get(u, 0.0)
        if value > 0.0:
            self._x[u] = value
        else:
            self._x.pop(u, None)
        if not self._x:
            self._l1 = 0.0

    def __contains__(self, u: int) -> bool:
        return u in self._x

    def __len__(self) -> int:
        return len(self._x)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FractionalVector):
            return NotImplemented
        return self._x == other._x

    def __repr__(self) -> str:
        inner = ", ".join(f"{u}: {v:g}" for u, v in sorted(self._x.items()))
        return f"FractionalVector({{{inner}}})"

    @property
    def l1(self) -> float:
        return self._l1

    def support(self) -> list[int]:
        return sorted(self._x)

    def items(self) -> list[tuple[int, float]]:
        return sorted(self._x.items())

    def copy(self) -> "FractionalVector":
        out = FractionalVector()
        out._x = dict(self._x)
        out._l1 = self._l1
        return out

    def join_unit(self, u: int) -> "FractionalVector":
        """x with coordinate u raised to 1."""
        out = self.copy()
        out[u] = 1.0
        return out

    def without(self, u: int) -> "FractionalVector":
        """x with coordinate u zeroed."""
        out = self.copy()
        out[u] = 0.0
        return out

    def to_dict(self) -> dict[int, float]:
        return dict(sorted(self._x.items()))


@lru_cache(maxsize=32)
def _subset_bits(s: int) -> np.ndarray:
    masks = np.arange(1 << s, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(s, dtype=np.int64)) & 1).astype(bool)
    bits.setflags(write=False)
    return bits


def _enumerate(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    bits = _subset_bits(len(values))
    probs = np.prod(np.where(bits, values, 1.0 - values), axis=1)
    return probs, bits


def sample_set(x: FractionalVector, rng: np.random.Generator) -> frozenset:
    """Draw R(x): each u in supp(x) independently with probability x_u."""
    ids = x.support()
    if not ids:
        return frozenset()
    vals = np.array([x[u] for u in ids])
    keep = rng.random(len(ids)) < vals
    return frozenset(u for u, k in zip(ids, keep) if k)


def multilinear_exact(oracle: ValueOracle, x: FractionalVector, cap: int = EXACT_CAP) -> float:
    ids = x.support()
    if len(ids) > cap:
        raise CapacityError(
            f"support of size {len(ids)} exceeds exact cap {cap}; use the sampled estimator")
    vals = np.array([x[u] for u in ids])
    probs, bits = _enumerate(vals)
    return float(probs @ oracle.batch(ids, bits))


def partial_derivative_exact(oracle: ValueOracle, x: FractionalVector, u: int,
                             cap: int = EXACT_CAP) -> float:
    """dF/dx_u at x, i.e. F(x with x_u=1) - F(x with x_u=0)."""
    ids = [v for v in x.support() if v != u]
    if len(ids) + 1 > cap:
        raise CapacityError(
            f"support of size {len(ids) + 1} exceeds exact cap {cap}; use the sampled estimator")
    vals = np.array([x[v] for v in ids])
    probs, bits = _enumerate(vals)
    col_ids = ids + [u]
    rows = bits.shape[0]
    with_u = np.hstack([bits, np.ones((rows, 1), dtype=bool)])
    without_u = np.hstack([bits, np.zeros((rows, 1), dtype=bool)])
    return float(probs @ (oracle.batch(col_ids, with_u) - oracle.batch(col_ids, without_u)))


def sample_count(p: float, k: int, eps_prime: float, i: int) -> int:
    """Per-arrival sample budget of the sampled-derivative variant, unscaled.

    ceil(4800 (1/p + 1)^2 k^2 / (eps'(1 - eps'))^2 * ln(80 i^2 / eps'))
    """
    if not 0.0 < p < 1.0:
        raise InputError(f"p must lie in (0, 1), got {p}")
    if not 0.0 < eps_prime < 1.0:
        raise InputError(f"eps_prime must lie in (0, 1), got {eps_prime}")
    if k < 1 or i < 1:
        raise InputError(f"k and i must be >= 1, got k={k}, i={i}")
    lead = 4800.0 * (1.0 / p + 1.0) ** 2 * k ** 2 / (eps_prime * (1.0 - eps_prime)) ** 2
    return math.ceil(lead * math.log(80.0 * i * i / eps_prime))


def scaled_samples(ell: int, scale: float) -> int:
    """ceil(ell * scale), at least 1; float noise below 1e-9 is ignored."""
    if not 0.0 < scale <= 1.0:
        raise InputError(f"sample_scale must lie in (0, 1], got {scale}")
    return max(1, math.ceil(ell * scale - 1e-9))


def scale_for_budget(p: float, k: int, eps_prime: float, n: int, budget: int) -> float:
    """Largest scale keeping every arrival 1..n at or under ``budget`` samples."""
    return min(1.0, budget / sample_count(p, k, eps_prime, max(1, n)))


@dataclass
class EstimateStats:
    samples: int
    mean: float
    variance: float


def estimate_partial_derivative(oracle: ValueOracle, x: FractionalVector, u: int, samples: int,
                                rng: np.random.Generator, stats: bool = False):
    """Average of ``samples`` draws of f(R(x) + u) - f(R(x)).

    R(x) is drawn over the whole support of x, u included if x_u > 0.
    When x has empty support the draw is deterministic and f is queried once
    per side.  With ``stats=True`` returns an :class:`EstimateStats`.
    """
    if samples < 1:
        raise InputError("samples must be >= 1")
    ids = x.support()
    if u not in x:
        ids = ids + [u]
    col_u = ids.index(u)
    if len(x) == 0:
        rows = np.zeros((1, len(ids)), dtype=bool)
    else:
        probs = np.array([x[v] for v in ids])
        rows = rng.random((samples, len(ids))) < probs
    with_u = rows.copy()
    with_u[:, col_u] = True
    diffs = oracle.batch(ids, with_u) - oracle.batch(ids, rows)
    mean = float(diffs.mean())
    if stats:
        var = float(diffs.var(ddof=1)) if len(diffs) > 1 else 0.0
        return EstimateStats(samples, mean, var)
    return mean


def lovasz(oracle: ValueOracle, x: FractionalVector) -> float:
    """Integral over lambda in [0, 1] of f({u : x_u >= lambda}), piecewise."""
    ids = x.support()
    vals = np.array([x[u] for u in ids])
    levels = sorted(set(vals.tolist()), reverse=True)
    rows = [vals >= lv for lv in levels]
    widths = [a - b for a, b in zip(levels, levels[1:] + [0.0])]
    top = levels[0] if levels else 0.0
    if top < 1.0:
        rows.append(np.zeros(len(ids), dtype=bool))
        widths.append(1.0 - top)
    f = oracle.batch(ids, np.array(rows, dtype=bool).reshape(len(rows), len(ids)))
    return float(np.dot(widths, f))
