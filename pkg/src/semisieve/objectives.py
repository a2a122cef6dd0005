"""Submodular objectives behind a counted value-oracle interface.

Sets are passed as any iterable of integer element ids ``0..n-1``.  Every
oracle also supports batched evaluation over a boolean membership matrix,
which is what the extension and offline code use internally::

    oracle.batch(ids, members)   # members[r, j] -> ids[j] in the r-th set

Each logical evaluation (one set) increments ``oracle.calls`` by one,
whether it came through :meth:`ValueOracle.value` or a batch.
"""
from __future__ import annotations

import itertools
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError

TABLE_MAX_N = 24


class GroundSet:
    """Dense integer ids ``0..n-1`` with optional string labels."""

    def __init__(self, n: int, labels: Sequence[str] | None = None):
        if n < 0:
            raise InputError(f"ground set size must be >= 0, got {n}")
        if labels is not None and len(labels) != n:
            raise InputError("labels must have one entry per element")
        self.n = int(n)
        self.labels = list(labels) if labels is not None else None

    def __len__(self):
        return self.n

    def __iter__(self):
        return iter(range(self.n))

    def check(self, S: Iterable[int]) -> frozenset:
        S = frozenset(int(u) for u in S)
        for u in S:
            if u < 0 or u >= self.n:
                raise InputError(f"element id {u} out of range for ground set of size {self.n}")
        return S

    def label(self, u: int) -> str:
        return self.labels[u] if self.labels is not None else str(u)


class ValueOracle:
    """Base class for counted set-function oracles.

    Subclasses implement ``_value(S)`` for a frozenset and may override
    ``_batch(ids, members)`` with a vectorized version.
    """

    def __init__(self, n: int, labels: Sequence[str] | None = None):
        self.ground = GroundSet(n, labels)
        self._calls = 0
        self._lock = threading.Lock()
        self._table: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.ground.n

    @property
    def calls(self) -> int:
        return self._calls

    def reset_calls(self) -> None:
        with self._lock:
            self._calls = 0

    def _count(self, m: int) -> None:
        with self._lock:
            self._calls += m

    @contextmanager
    def uncounted(self):
        """Evaluations inside the block are not billed (for instrumentation)."""
        before = self._calls
        try:
            yield self
        finally:
            with self._lock:
                self._calls = before

    def value(self, S: Iterable[int]) -> float:
        S = self.ground.check(S)
        self._count(1)
        if self._table is not None:
            mask = 0
            for u in S:
                mask |= 1 << u
            return float(self._table[mask])
        return float(self._value(S))

    def marginal(self, u: int, S: Iterable[int]) -> float:
        """f(S + u) - f(S); two oracle calls."""
        S = self.ground.check(S)
        if u in S:
            raise InputError(f"element {u} already in S")
        return self.value(S | {u}) - self.value(S)

    def batch(self, ids: Sequence[int], members: np.ndarray) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        members = np.asarray(members, dtype=bool)
        if members.ndim != 2 or members.shape[1] != len(ids):
            raise InputError("members must be a (sets x len(ids)) boolean matrix")
        if len(ids) and (ids.min() < 0 or ids.max() >= self.n):
            raise InputError("element id out of range")
        self._count(members.shape[0])
        if self._table is not None:
            weights = np.left_shift(np.int64(1), ids)
            masks = members.astype(np.int64) @ weights if len(ids) else np.zeros(members.shape[0], np.int64)
            return self._table[masks]
        return np.asarray(self._batch(ids, members), dtype=float)

    def _value(self, S: frozenset) -> float:
        raise NotImplementedError

    def _batch(self, ids: np.ndarray, members: np.ndarray) -> np.ndarray:
        out = np.empty(members.shape[0])
        for r, row in enumerate(members):
            out[r] = self._value(frozenset(ids[row].tolist()))
        return out

    def memoize(self) -> "ValueOracle":
        """Precompute f on all 2^n subsets; later calls become table lookups.

        Call accounting is unchanged: a lookup still counts as one call.
        """
        if self.n > TABLE_MAX_N:
            raise InputError(f"memoize supports n <= {TABLE_MAX_N}, got {self.n}")
        if self._table is None:
            self._table = _full_table(self)
        return self

    @property
    def memoized(self) -> bool:
        return self._table is not None

    def arrival_order(self) -> list[int]:
        return list(range(self.n))


def _full_table(oracle: ValueOracle) -> np.ndarray:
    n = oracle.n
    ids = np.arange(n, dtype=np.int64)
    size = 1 << n
    table = np.empty(size)
    step = 1 << 16
    for start in range(0, size, step):
        masks = np.arange(start, min(size, start + step), dtype=np.int64)
        members = ((masks[:, None] >> ids) & 1).astype(bool)
        table[start:start + len(masks)] = oracle._batch(ids, members)
    return table


def _row_sums(terms: np.ndarray) -> np.ndarray:
    # strict left-to-right order; np.sum may regroup depending on the row count
    if terms.shape[1] == 0:
        return np.zeros(terms.shape[0])
    return np.cumsum(terms, axis=1)[:, -1]


class ModularOracle(ValueOracle):
    """f(S) = sum of non-negative weights; monotone and modular."""

    def __init__(self, weights: Sequence[float], labels=None):
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0):
            raise InputError("modular weights must be non-negative")
        super().__init__(len(w), labels)
        self.weights = w

    def _value(self, S):
        return float(self._batch(np.array(sorted(S), dtype=np.int64), np.ones((1, len(S)), bool))[0])

    def _batch(self, ids, members):
        full = np.zeros((members.shape[0], self.n), dtype=bool)
        full[:, ids] = members
        return _row_sums(np.where(full, self.weights, 0.0))


class CoverageOracle(ValueOracle):
    """Weighted coverage: total weight of the union of the covers of S."""

    def __init__(self, universe_weights: Sequence[float], covers: Sequence[Iterable[int]], labels=None):
        w = np.asarray(universe_weights, dtype=float)
        if np.any(w < 0):
            raise InputError("universe weights must be non-negative")
        super().__init__(len(covers), labels)
        self.universe_weights = w
        self.covers = [sorted(set(int(j) for j in c)) for c in covers]
        incidence = np.zeros((len(covers), len(w)), dtype=bool)
        for u, c in enumerate(self.covers):
            for j in c:
                if j < 0 or j >= len(w):
                    raise InputError(f"cover of element {u} references universe item {j}")
                incidence[u, j] = True
        self._incidence = incidence

    def _value(self, S):
        covered = np.zeros((1, len(self.universe_weights)), dtype=bool)
        for u in S:
            covered[0, self.covers[u]] = True
        return float(_row_sums(np.where(covered, self.universe_weights, 0.0))[0])

    def _batch(self, ids, members):
        hits = members.astype(np.float64) @ self._incidence[ids].astype(np.float64)
        return _row_sums(np.where(hits > 0, self.universe_weights, 0.0))


class CutOracle(ValueOracle):
    """Undirected weighted cut: total weight of edges with exactly one endpoint in S."""

    def __init__(self, n: int, edges: Sequence[tuple[int, int, float]], labels=None):
        super().__init__(n, labels)
        a, b, w = [], [], []
        for e in edges:
            if len(e) == 2:
                u, v, wt = e[0], e[1], 1.0
            else:
                u, v, wt = e
            u, v, wt = int(u), int(v), float(wt)
            if wt < 0:
                raise InputError("edge weights must be non-negative")
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge ({u}, {v}) out of range")
            if u == v:
                continue
            a.append(u)
            b.append(v)
            w.append(wt)
        self.edge_a = np.asarray(a, dtype=np.int64)
        self.edge_b = np.asarray(b, dtype=np.int64)
        self.edge_w = np.asarray(w, dtype=float)

    @property
    def edges(self):
        return list(zip(self.edge_a.tolist(), self.edge_b.tolist(), self.edge_w.tolist()))

    def _value(self, S):
        inside = np.zeros(self.n, dtype=bool)
        inside[list(S)] = True
        cut = (inside[self.edge_a] != inside[self.edge_b])[None, :]
        return float(_row_sums(np.where(cut, self.edge_w, 0.0))[0])

    def _batch(self, ids, members):
        pos = np.full(self.n, len(ids), dtype=np.int64)
        pos[ids] = np.arange(len(ids))
        padded = np.concatenate([members, np.zeros((members.shape[0], 1), dtype=bool)], axis=1)
        in_a = padded[:, pos[self.edge_a]]
        in_b = padded[:, pos[self.edge_b]]
        return _row_sums(np.where(in_a ^ in_b, self.edge_w, 0.0))


class HardOracle(ValueOracle):
    """The two-regime adversarial function over {u_1..u_{k-1}} + {v_1..v_h} + {w}.

    f(S) = |S| when w is not in S, and k + |S & {u_i}| otherwise.
    Ids: u_i -> i-1, v_i -> k-2+i, w -> k+h-1.
    """

    def __init__(self, k: int, h: int, order: Sequence[int] | None = None):
        if k < 1 or h < 1:
            raise InputError(f"hard instance needs k >= 1 and h >= 1, got k={k}, h={h}")
        n = k + h
        labels = [f"u{i}" for i in range(1, k)] + [f"v{i}" for i in range(1, h + 1)] + ["w"]
        super().__init__(n, labels)
        self.k, self.h = k, h
        self.w = n - 1
        self.u_ids = list(range(k - 1))
        self.v_ids = list(range(k - 1, k - 1 + h))
        if order is None:
            order = self.u_ids + self.v_ids + [self.w]
        order = [int(u) for u in order]
        if sorted(order) != list(range(n)) or order[-1] != self.w:
            raise InputError("hard-instance order must be a permutation of all ids with w last")
        self._order = order

    def _value(self, S):
        if self.w in S:
            return float(self.k + sum(1 for u in S if u < self.k - 1))
        return float(len(S))

    def _batch(self, ids, members):
        is_u = ids < self.k - 1
        is_w = ids == self.w
        size = members.sum(axis=1)
        n_u = members[:, is_u].sum(axis=1)
        has_w = members[:, is_w].any(axis=1)
        return np.where(has_w, self.k + n_u, size).astype(float)

    def arrival_order(self) -> list[int]:
        return list(self._order)


def hard_order(k: int, h: int, rng: np.random.Generator | None = None) -> list[int]:
    """Arrival order for the hard instance: u's and v's (shuffled if rng given), w last."""
    rest = list(range(k - 1 + h))
    if rng is not None:
        rest = [int(u) for u in rng.permutation(rest)]
    return rest + [k + h - 1]


@dataclass
class CoverageInstance:
    universe_weights: list[float]
    covers: list[list[int]]
    labels: list[str] | None = None


@dataclass
class CutInstance:
    n: int
    edges: list[tuple[int, int, float]] = field(default_factory=list)
    labels: list[str] | None = None


@dataclass
class HardInstance:
    k: int
    h: int
    order: list[int] | None = None


def make_coverage(instance: CoverageInstance) -> CoverageOracle:
    return CoverageOracle(instance.universe_weights, instance.covers, instance.labels)


def make_cut(instance: CutInstance) -> CutOracle:
    return CutOracle(instance.n, instance.edges, instance.labels)


def make_hard_instance(k: int, h: int, order: Sequence[int] | None = None) -> HardOracle:
    return HardOracle(k, h, order)


def random_coverage(n: int, universe: int, density: float, rng: np.random.Generator,
                    weighted: bool = True) -> CoverageInstance:
    """Each element covers each universe item independently with prob ``density``."""
    weights = rng.uniform(0.5, 2.0, size=universe) if weighted else np.ones(universe)
    covers = [np.flatnonzero(rng.random(universe) < density).tolist() for _ in range(n)]
    return CoverageInstance([float(w) for w in weights], covers)


def random_cut(n: int, density: float, rng: np.random.Generator, weighted: bool = True) -> CutInstance:
    edges = []
    for u, v in itertools.combinations(range(n), 2):
        if rng.random() < density:
            wt = float(rng.uniform(0.5, 2.0)) if weighted else 1.0
            edges.append((u, v, wt))
    return CutInstance(n, edges)


def _all_values(oracle: ValueOracle) -> np.ndarray:
    if oracle.memoized:
        return oracle._table
    return _full_table(oracle)


def check_nonnegative(oracle: ValueOracle, tol: float = 0.0) -> bool:
    return bool(np.all(_all_values(oracle) >= -tol))


def check_submodular(oracle: ValueOracle, tol: float = 1e-9) -> bool:
    """Exhaustive check of f(A+u) + f(A+v) >= f(A) + f(A+u+v) for all A and u, v outside A.

    This local form is equivalent to diminishing returns over all A <= B.
    """
    n = oracle.n
    if n > 16:
        raise InputError("exhaustive submodularity check limited to n <= 16")
    table = _all_values(oracle)
    masks = np.arange(1 << n, dtype=np.int64)
    for u in range(n):
        for v in range(u + 1, n):
            bu, bv = 1 << u, 1 << v
            A = masks[(masks & (bu | bv)) == 0]
            lhs = table[A | bu] + table[A | bv]
            rhs = table[A] + table[A | bu | bv]
            if np.any(lhs < rhs - tol):
                return False
    return True
