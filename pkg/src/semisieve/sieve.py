"""Multilinear threshold streaming for non-negative submodular maximization.

Three entry points share one engine:

* :func:`run_known_tau` - a single threshold tau, given up front.
* :func:`run_auto_tau` - a geometric grid of guesses (1+eps')^h maintained from
  the running singleton maximum m, one fractional solution per guess, with
  exact multilinear derivatives.
* :func:`run_sampled` - as above with derivatives estimated by sampling.

Every arriving element is looked at once.  For each live guess tau the
element is accepted when its derivative at the current fractional solution
reaches c*tau/k, and then min(p, k - |x|_1) of it is added.  After the pass
each fractional solution is swap-rounded (S1) and handed to an offline
solver restricted to its support (S2); the best set found is returned.

Guesses whose fractional solutions are identical are kept together as one
*band* (a contiguous exponent range).  A band is split only when an arrival
is accepted by some of its guesses and rejected by others, which happens at
a single cut point because the acceptance test is monotone in tau.
Derivative estimates and the final rounding are shared inside a band.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import InputError, InvariantError
from .extensions import (EXACT_CAP, FractionalVector, estimate_partial_derivative,
                         multilinear_exact, partial_derivative_exact, sample_count, scaled_samples)
from .objectives import ValueOracle
from .offline import BRUTE_FORCE_MAX_WORK, brute_force, random_greedy
from .rounding import swap_round

OFFLINE_MODES = ("brute_force", "random_greedy")
ESTIMATORS = ("exact", "sampled")
STRUCTURE_TOL = 1e-9


def choose_c(alpha: float, p: float) -> float:
    """c = alpha(1-p) / (2 alpha + (1-p)^2); lies in (0, 1/2]."""
    if not 0.0 < alpha <= 1.0:
        raise InputError(f"alpha must lie in (0, 1], got {alpha}")
    if not 0.0 < p < 1.0:
        raise InputError(f"p must lie in (0, 1), got {p}")
    return alpha * (1.0 - p) / (2.0 * alpha + (1.0 - p) ** 2)


def guarantee(alpha: float, p: float) -> float:
    """Fraction of tau guaranteed in expectation when c = choose_c(alpha, p)."""
    return choose_c(alpha, p)


@dataclass
class SieveParams:
    k: int
    p: float
    alpha: float = 1.0
    c: float | None = None
    eps_prime: float = 0.125
    offline: str = "brute_force"
    estimator: str = "exact"
    sample_scale: float = 1.0
    sample_cap: int | None = None
    exact_cap: int = EXACT_CAP
    brute_force_max_work: int = BRUTE_FORCE_MAX_WORK
    track_exact: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise InputError(f"k must be >= 1, got {self.k}")
        if not 0.0 < self.p < 1.0:
            raise InputError(f"p must lie in (0, 1), got {self.p}")
        if not 0.0 < self.eps_prime < 1.0:
            raise InputError(f"eps_prime must lie in (0, 1), got {self.eps_prime}")
        if self.offline not in OFFLINE_MODES:
            raise InputError(f"offline must be one of {OFFLINE_MODES}, got {self.offline!r}")
        if self.estimator not in ESTIMATORS:
            raise InputError(f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}")
        if not 0.0 < self.sample_scale <= 1.0:
            raise InputError(f"sample_scale must lie in (0, 1], got {self.sample_scale}")
        if self.sample_cap is not None and self.sample_cap < 1:
            raise InputError(f"sample_cap must be >= 1, got {self.sample_cap}")
        if self.c is None:
            self.c = choose_c(self.alpha, self.p)
        elif self.c <= 0:
            raise InputError(f"c must be > 0, got {self.c}")
        if not 0.0 < self.alpha <= 1.0:
            raise InputError(f"alpha must lie in (0, 1], got {self.alpha}")

    def samples(self, i: int) -> int:
        """Samples for arrival i: the formula's count, scaled, then truncated at sample_cap."""
        n = scaled_samples(sample_count(self.p, self.k, self.eps_prime, i), self.sample_scale)
        return n if self.sample_cap is None else min(n, self.sample_cap)

    @property
    def max_support(self) -> int:
        return math.ceil(self.k / self.p - 1e-9)


def accepts(derivative: float, tau: float, c: float, k: int) -> bool:
    return derivative >= c * tau / k


class ThresholdState:
    """Fractional solution for one guess tau (or one band of guesses)."""

    checks = 0  # class-wide count of structure checks, one per mutation

    def __init__(self, tau: float, k: int, p: float):
        self.tau = tau
        self.k = k
        self.p = p
        self.x = FractionalVector()
        self.saturated = False

    @property
    def stored(self) -> list[int]:
        return self.x.support()

    def copy(self, tau: float | None = None) -> "ThresholdState":
        out = ThresholdState(self.tau if tau is None else tau, self.k, self.p)
        out.x = self.x.copy()
        out.saturated = self.saturated
        return out

    def same_solution(self, other: "ThresholdState") -> bool:
        return self.saturated == other.saturated and self.x == other.x

    def accept(self, u: int) -> None:
        """x <- x + min(p, k - |x|_1) * 1_u."""
        if self.saturated:
            return
        if u in self.x:
            raise InputError(f"element {u} already in the fractional solution")
        room = self.k - self.x.l1
        if room <= self.p + 1e-12:
            amount = self.p if abs(room - self.p) <= 1e-12 else max(0.0, room)
            self.saturated = True
        else:
            amount = self.p
        if amount > 0.0:
            self.x[u] = amount
        self.check_structure()

    def check_structure(self) -> None:
        ThresholdState.checks += 1
        odd = [v for _, v in self.x.items() if abs(v - self.p) > 1e-12]
        if len(odd) > 1:
            raise InvariantError(f"{len(odd)} coordinates differ from p={self.p}")
        if odd and (not self.saturated or abs(self.x.l1 - self.k) > STRUCTURE_TOL):
            raise InvariantError("a residual coordinate exists but |x|_1 != k")
        if len(self.x) > math.ceil(self.k / self.p - 1e-9):
            raise InvariantError(f"{len(self.x)} stored elements exceed ceil(k/p)")


def process_element(state: ThresholdState, u: int, derivative: float,
                    params: SieveParams) -> ThresholdState:
    """Accept u into ``state`` iff derivative >= c*tau/k."""
    if not state.saturated and accepts(derivative, state.tau, params.c, params.k):
        state.accept(u)
    return state


@dataclass
class FinalizeResult:
    S1: frozenset
    S2: frozenset
    best: frozenset
    f1: float
    f2: float

    @property
    def f_best(self) -> float:
        return max(self.f1, self.f2)


def finalize(oracle: ValueOracle, state: ThresholdState, params: SieveParams,
             rng: np.random.Generator) -> FinalizeResult:
    """S1 by swap rounding, S2 by the offline solver on supp(x); keep the better one."""
    S1, _ = swap_round(state.x, params.k, rng)
    support = state.x.support()
    if params.offline == "brute_force":
        S2 = brute_force(oracle, support, params.k, params.brute_force_max_work)
    else:
        S2 = random_greedy(oracle, support, params.k, rng)
    f1 = oracle.value(S1)
    f2 = oracle.value(S2) if S2 != S1 else f1
    best = S1 if f1 >= f2 else S2
    return FinalizeResult(S1, S2, best, f1, f2)


# --- threshold grid -------------------------------------------------------

def grid_range(m: float, eps_prime: float, k: int, c: float) -> tuple[int, int] | None:
    """Exponent range [lo, hi] of {(1+eps')^h : m/(1+eps') <= (1+eps')^h <= m k / c}."""
    if m <= 0.0:
        return None
    base = 1.0 + eps_prime
    low_val = m / base
    high_val = m * k / c
    lb = math.log(base)
    lo = math.ceil(math.log(low_val) / lb)
    while base ** (lo - 1) >= low_val:
        lo -= 1
    while base ** lo < low_val:
        lo += 1
    hi = math.floor(math.log(high_val) / lb)
    while base ** (hi + 1) <= high_val:
        hi += 1
    while base ** hi > high_val:
        hi -= 1
    return (lo, hi) if lo <= hi else None


def grid_values(m: float, eps_prime: float, k: int, c: float) -> list[float]:
    r = grid_range(m, eps_prime, k, c)
    if r is None:
        return []
    base = 1.0 + eps_prime
    return [base ** h for h in range(r[0], r[1] + 1)]


def grid_size_bound(k: int, c: float, eps_prime: float) -> float:
    """1 + (1 + ln k - ln c) / ln(1 + eps')."""
    return 1.0 + (1.0 + math.log(k) - math.log(c)) / math.log(1.0 + eps_prime)


def _zigzag(h: int) -> int:
    return 2 * h if h >= 0 else -2 * h - 1


def _master_seed(rng) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2 ** 63 - 1))
    if rng is None:
        return int(np.random.SeedSequence().entropy % (2 ** 63))
    return int(rng)


@dataclass
class Band:
    lo: int
    hi: int
    state: ThresholdState

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1


@dataclass
class EstimateRecord:
    i: int
    tau_lo: float
    tau_hi: float
    samples: int
    estimate: float
    exact: float | None


@dataclass
class FinalState:
    tau_lo: float
    tau_hi: float
    x: FractionalVector
    saturated: bool
    f1: float
    f2: float


@dataclass
class RunDiagnostics:
    variant: str
    k: int
    p: float
    c: float
    tau: float | None = None
    F_hat: float | None = None
    l1: float | None = None
    stored: int = 0
    oracle_calls: int = 0
    arrivals: int = 0
    m: float = 0.0
    max_grid: int = 0
    max_stored: int = 0
    max_distinct_stored: int = 0
    max_bands: int = 0
    fallbacks: int = 0
    f_output: float = 0.0
    finals: list[FinalState] = field(default_factory=list)
    estimates: list[EstimateRecord] = field(default_factory=list)


class SieveRun:
    """Streaming state for the grid-of-guesses variants.

    ``feed`` one element at a time, then ``finalize``.  ``estimator`` selects
    exact derivatives (with a sampled fallback above the exact cap) or
    sampled ones.
    """

    def __init__(self, oracle: ValueOracle, params: SieveParams, seed: int,
                 estimator: str = "exact"):
        if estimator not in ESTIMATORS:
            raise InputError(f"estimator must be one of {ESTIMATORS}")
        self.oracle = oracle
        self.params = params
        self.seed = seed
        self.estimator = estimator
        self.base = 1.0 + params.eps_prime
        self.i = 0
        self.bands: list[Band] = []
        self.range: tuple[int, int] | None = None
        self.m = oracle.value(())
        self.diag = RunDiagnostics("sampled" if estimator == "sampled" else "auto_tau",
                                   params.k, params.p, params.c)
        self.update_threshold_grid(self.m)
        self._account()

    def tau(self, h: int) -> float:
        return self.base ** h

    def grid(self) -> list[float]:
        if self.range is None:
            return []
        return [self.tau(h) for h in range(self.range[0], self.range[1] + 1)]

    @property
    def grid_size(self) -> int:
        return 0 if self.range is None else self.range[1] - self.range[0] + 1

    def states(self) -> dict[float, ThresholdState]:
        """Per-guess view; guesses in one band share the same solution object."""
        out = {}
        for b in self.bands:
            for h in range(b.lo, b.hi + 1):
                st = ThresholdState(self.tau(h), self.params.k, self.params.p)
                st.x, st.saturated = b.state.x, b.state.saturated
                out[self.tau(h)] = st
        return out

    def update_threshold_grid(self, new_m: float) -> None:
        """Recompute the grid for ``new_m``; drop states of removed guesses, start new ones empty."""
        if new_m < self.m:
            raise InputError("m can only increase")
        self.m = new_m
        p = self.params
        new = grid_range(new_m, p.eps_prime, p.k, p.c)
        kept: list[Band] = []
        if new is not None:
            lo, hi = new
            for b in self.bands:
                a, z = max(b.lo, lo), min(b.hi, hi)
                if a <= z:
                    b.lo, b.hi = a, z
                    kept.append(b)
            if not kept:
                kept.append(Band(lo, hi, ThresholdState(self.tau(lo), p.k, p.p)))
            if kept[0].lo > lo:
                kept.insert(0, Band(lo, kept[0].lo - 1, ThresholdState(self.tau(lo), p.k, p.p)))
            if kept[-1].hi < hi:
                start = kept[-1].hi + 1
                kept.append(Band(start, hi, ThresholdState(self.tau(start), p.k, p.p)))
        self.bands = self._merge(kept)
        self.range = new

    @staticmethod
    def _merge(bands: list[Band]) -> list[Band]:
        out: list[Band] = []
        for b in bands:
            if out and out[-1].hi + 1 == b.lo and out[-1].state.same_solution(b.state):
                out[-1].hi = b.hi
            else:
                out.append(b)
        return out

    def _derivative(self, band: Band, u: int) -> float:
        p = self.params
        x = band.state.x
        exact = None
        if self.estimator == "exact" and len(x) + 1 <= p.exact_cap:
            d = partial_derivative_exact(self.oracle, x, u, p.exact_cap)
            samples = 0
            exact = d
        else:
            if self.estimator == "exact":
                self.diag.fallbacks += 1
            samples = p.samples(self.i)
            rng = np.random.default_rng(
                np.random.SeedSequence(self.seed, spawn_key=(0, self.i, _zigzag(band.lo))))
            d = estimate_partial_derivative(self.oracle, x, u, samples, rng)
            if p.track_exact and len(x) + 1 <= p.exact_cap:
                with self.oracle.uncounted():
                    exact = partial_derivative_exact(self.oracle, x, u, p.exact_cap)
        if p.track_exact or self.estimator == "sampled":
            self.diag.estimates.append(EstimateRecord(
                self.i, self.tau(band.lo), self.tau(band.hi), samples, d, exact))
        return d

    def _cut(self, band: Band, d: float) -> int:
        """Largest exponent h in the band accepting derivative d, or band.lo - 1."""
        c, k = self.params.c, self.params.k
        lo, hi = band.lo, band.hi
        if not accepts(d, self.tau(lo), c, k):
            return lo - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if accepts(d, self.tau(mid), c, k):
                lo = mid
            else:
                hi = mid - 1
        return lo

    def feed(self, u: int) -> None:
        self.i += 1
        fu = self.oracle.value((u,))
        if self.m < fu:
            self.update_threshold_grid(fu)
        new_bands: list[Band] = []
        for band in self.bands:
            if band.state.saturated:
                new_bands.append(band)
                continue
            d = self._derivative(band, u)
            cut = self._cut(band, d)
            if cut < band.lo:
                new_bands.append(band)
                continue
            if cut < band.hi:
                rest = Band(cut + 1, band.hi, band.state.copy(self.tau(cut + 1)))
                band.hi = cut
                band.state.accept(u)
                new_bands.extend([band, rest])
            else:
                band.state.accept(u)
                new_bands.append(band)
        self.bands = self._merge(new_bands)
        self._account()

    def _account(self) -> None:
        expect = self.range[0] if self.range else None
        for b in self.bands:
            if b.lo != expect or b.hi < b.lo:
                raise InvariantError(f"bands do not tile the grid at exponent {b.lo}")
            expect = b.hi + 1
        if self.range and expect != self.range[1] + 1:
            raise InvariantError("bands do not reach the top of the grid")
        d = self.diag
        d.arrivals = self.i
        d.m = self.m
        d.max_grid = max(d.max_grid, self.grid_size)
        d.max_bands = max(d.max_bands, len(self.bands))
        d.max_stored = max(d.max_stored, sum(b.size * len(b.state.x) for b in self.bands))
        distinct = set()
        for b in self.bands:
            distinct.update(b.state.stored)
        d.max_distinct_stored = max(d.max_distinct_stored, len(distinct))

    def finalize(self) -> tuple[frozenset, RunDiagnostics]:
        best, best_val = frozenset(), None
        for band in self.bands:
            rng = np.random.default_rng(
                np.random.SeedSequence(self.seed, spawn_key=(1, _zigzag(band.lo))))
            res = finalize(self.oracle, band.state, self.params, rng)
            self.diag.finals.append(FinalState(self.tau(band.lo), self.tau(band.hi),
                                               band.state.x.copy(), band.state.saturated,
                                               res.f1, res.f2))
            if best_val is None or res.f_best > best_val:
                best, best_val = res.best, res.f_best
        if best_val is None:
            best_val = self.oracle.value(best)
        self.diag.f_output = best_val
        self.diag.stored = len({u for b in self.bands for u in b.state.stored})
        self.diag.oracle_calls = self.oracle.calls
        return best, self.diag


def run_known_tau(oracle: ValueOracle, stream: Iterable[int], tau: float, params: SieveParams,
                  rng=None) -> tuple[frozenset, RunDiagnostics]:
    """Single-threshold pass with guess ``tau``, then round and solve offline."""
    if not tau > 0:
        raise InputError(f"tau must be > 0, got {tau}")
    seed = _master_seed(rng)
    state = ThresholdState(tau, params.k, params.p)
    diag = RunDiagnostics("known_tau", params.k, params.p, params.c, tau=tau)
    i = 0
    for u in stream:
        i += 1
        if state.saturated:
            continue
        x = state.x
        exact = None
        if params.estimator == "exact" and len(x) + 1 <= params.exact_cap:
            d = partial_derivative_exact(oracle, x, u, params.exact_cap)
            exact, samples = d, 0
        else:
            if params.estimator == "exact":
                diag.fallbacks += 1
            samples = params.samples(i)
            srng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, i, 0)))
            d = estimate_partial_derivative(oracle, x, u, samples, srng)
        if params.track_exact or params.estimator == "sampled":
            diag.estimates.append(EstimateRecord(i, tau, tau, samples, d, exact))
        process_element(state, u, d, params)
        diag.max_stored = max(diag.max_stored, len(state.x))
    diag.arrivals = i
    diag.max_distinct_stored = diag.max_stored
    diag.max_grid = diag.max_bands = 1
    if len(state.x) <= params.exact_cap:
        with oracle.uncounted():
            diag.F_hat = multilinear_exact(oracle, state.x, params.exact_cap)
    diag.l1 = state.x.l1
    diag.stored = len(state.x)
    frng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, 0)))
    res = finalize(oracle, state, params, frng)
    diag.finals.append(FinalState(tau, tau, state.x.copy(), state.saturated, res.f1, res.f2))
    diag.f_output = res.f_best
    diag.oracle_calls = oracle.calls
    return res.best, diag


def run_auto_tau(oracle: ValueOracle, stream: Iterable[int], params: SieveParams,
                 rng=None) -> tuple[frozenset, RunDiagnostics]:
    """Grid-of-guesses pass with exact derivatives; no estimate of f(OPT) needed."""
    run = SieveRun(oracle, params, _master_seed(rng), estimator="exact")
    for u in stream:
        run.feed(u)
    return run.finalize()


def run_sampled(oracle: ValueOracle, stream: Iterable[int], params: SieveParams,
                rng=None) -> tuple[frozenset, RunDiagnostics]:
    """Grid-of-guesses pass with sampled derivatives, sample_scale * the per-arrival budget."""
    run = SieveRun(oracle, params, _master_seed(rng), estimator="sampled")
    for u in stream:
        run.feed(u)
    return run.finalize()


def good_guess(grid: list[float], f_opt: float) -> float | None:
    """Largest grid value not exceeding f(OPT)."""
    below = [t for t in grid if t <= f_opt]
    return max(below) if below else None


def event_held(diag: RunDiagnostics, tau_hat: float, f_opt: float, eps_prime: float) -> bool | None:
    """Whether every recorded estimate for the band holding ``tau_hat`` was within
    eps'(1-eps') f(OPT) / (20k) of the exact derivative; None if nothing to judge."""
    tol = eps_prime * (1.0 - eps_prime) * f_opt / (20.0 * diag.k)
    seen = False
    for r in diag.estimates:
        if r.exact is None or not (r.tau_lo <= tau_hat <= r.tau_hi):
            continue
        seen = True
        if abs(r.estimate - r.exact) > tol:
            return False
    return True if seen else None
