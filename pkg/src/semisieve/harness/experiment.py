"""Experiment runner: variants and baselines over (instance, seed) pairs, with accounting.

Rows are computed per instance (in parallel when workers > 1) and reassembled
in config order, so the report is identical for any worker count except for
``runtime_ms``.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ..errors import CapacityError, InputError, InvariantError
from ..extensions import EXACT_CAP, scale_for_budget
from ..offline import BRUTE_FORCE_MAX_WORK, brute_force
from ..sieve import (SieveParams, SieveRun, _master_seed, grid_size_bound, run_auto_tau,
                     run_known_tau, run_sampled)
from .baselines import baseline_greedy, baseline_sieve_streaming
from .instances import Instance, generate_instance, instance_from_doc, load_instance

log = logging.getLogger(__name__)

COLUMNS = ["instance", "variant", "n", "k", "p", "c", "alpha", "eps_prime", "seed", "f_output",
           "f_opt", "bound_only", "ratio", "max_stored", "max_grid", "oracle_calls", "runtime_ms",
           "error"]
SWEEP_COLUMNS = ["k", "h", "n", "seed", "f_output", "f_opt", "ratio", "max_stored",
                 "max_distinct_stored", "max_grid", "stored_before_w", "u_stored_before_w"]
VARIANTS = ("known_tau", "auto_tau", "sampled")
BASELINES = ("greedy", "sieve_streaming")
WORKERS_ENV = "SEMISIEVE_WORKERS"

DEFAULTS = {
    "name": "experiment",
    "instances": [],
    "generate": [],
    "variant": "auto_tau",
    "k": None,
    "p": 0.125,
    "alpha": 1.0,
    "c": None,
    "eps_prime": 0.125,
    "tau": None,
    "offline": "brute_force",
    "sample_scale": 1.0,
    "sample_budget": None,
    "sample_cap": None,
    "exact_cap": EXACT_CAP,
    "brute_force_max_work": BRUTE_FORCE_MAX_WORK,
    "seeds": 10,
    "baselines": [],
    "baseline_eps": 0.1,
    "memoize": True,
    "output": None,
    "workers": 1,
}


def normalize_config(config: dict | None) -> dict:
    cfg = dict(DEFAULTS)
    unknown = set(config or {}) - set(DEFAULTS)
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    cfg.update({key: v for key, v in (config or {}).items() if v is not None})
    if cfg["variant"] not in VARIANTS:
        raise InputError(f"variant must be one of {VARIANTS}, got {cfg['variant']!r}")
    bad = set(cfg["baselines"]) - set(BASELINES)
    if bad:
        raise InputError(f"unknown baselines {sorted(bad)}; choose from {BASELINES}")
    if cfg["variant"] == "known_tau" and cfg["tau"] is None:
        raise InputError("variant known_tau needs tau (a number or 'opt')")
    seeds = cfg["seeds"]
    cfg["seeds"] = list(range(seeds)) if isinstance(seeds, int) else [int(s) for s in seeds]
    return cfg


def collect_instances(cfg: dict, base_dir: Path | None = None) -> list[tuple[str, dict]]:
    """(name, document) pairs: listed files first, then generated specs."""
    base_dir = Path(base_dir or ".")
    out = []
    for path in cfg["instances"]:
        path = Path(path)
        if not path.is_absolute():
            path = base_dir / path
        inst = load_instance(path)
        out.append((inst.name, inst.doc))
    for spec in cfg["generate"]:
        spec = dict(spec)
        count = int(spec.pop("count", 1))
        start = int(spec.pop("seed", 0))
        prefix = spec.pop("name", spec.get("type", "instance"))
        for s in range(start, start + count):
            out.append((f"{prefix}-{s:03d}", generate_instance(spec, s)))
    return out


def _params(cfg: dict, k: int, n: int) -> SieveParams:
    estimator = "sampled" if cfg["variant"] == "sampled" else "exact"
    params = SieveParams(k=k, p=float(cfg["p"]), alpha=float(cfg["alpha"]), c=cfg["c"],
                         eps_prime=float(cfg["eps_prime"]), offline=cfg["offline"],
                         estimator=estimator, sample_scale=float(cfg["sample_scale"]),
                         sample_cap=cfg["sample_cap"],
                         exact_cap=int(cfg["exact_cap"]),
                         brute_force_max_work=int(cfg["brute_force_max_work"]))
    if cfg["sample_budget"]:
        params.sample_scale = scale_for_budget(params.p, k, params.eps_prime, n,
                                               int(cfg["sample_budget"]))
    return params


def _optimum(inst: Instance, k: int, max_work: int) -> float | None:
    try:
        with inst.oracle.uncounted():
            return inst.oracle.value(brute_force(inst.oracle, range(inst.oracle.n), k, max_work))
    except CapacityError:
        return None


def _check_accounting(diag, params: SieveParams) -> None:
    bound = grid_size_bound(params.k, params.c, params.eps_prime)
    if diag.max_grid > bound + 1e-9:
        raise InvariantError(f"|T| reached {diag.max_grid}, above the bound {bound:.3f}")
    if diag.max_stored > params.max_support * max(diag.max_grid, 1):
        raise InvariantError(f"stored {diag.max_stored} elements, above ceil(k/p)*|T|max")


def _variant_row(inst: Instance, cfg: dict, k: int, seed: int, f_opt: float | None) -> dict:
    oracle = inst.oracle
    row = {"variant": cfg["variant"], "alpha": float(cfg["alpha"]),
           "eps_prime": float(cfg["eps_prime"]), "p": float(cfg["p"])}
    try:
        params = _params(cfg, k, oracle.n)
        row["c"] = params.c
        rng = np.random.default_rng(seed)
        oracle.reset_calls()
        t0 = time.perf_counter()
        if cfg["variant"] == "known_tau":
            tau = f_opt if cfg["tau"] == "opt" else float(cfg["tau"])
            if tau is None:
                raise CapacityError("tau='opt' needs a brute-force optimum, which is over the cap")
            S, diag = run_known_tau(oracle, inst.order, tau, params, rng)
        elif cfg["variant"] == "auto_tau":
            S, diag = run_auto_tau(oracle, inst.order, params, rng)
        else:
            S, diag = run_sampled(oracle, inst.order, params, rng)
        row["runtime_ms"] = (time.perf_counter() - t0) * 1000.0
        if len(S) > k:
            raise InvariantError(f"output of size {len(S)} exceeds k = {k}")
        _check_accounting(diag, params)
        row.update(f_output=diag.f_output, max_stored=diag.max_stored, max_grid=diag.max_grid,
                   oracle_calls=diag.oracle_calls)
    except CapacityError as e:
        row["error"] = f"CapacityError: {e}"
    return row


def _baseline_row(inst: Instance, name: str, cfg: dict, k: int) -> dict:
    oracle = inst.oracle
    oracle.reset_calls()
    t0 = time.perf_counter()
    if name == "greedy":
        S = baseline_greedy(oracle, range(oracle.n), k)
        extra = {"max_stored": oracle.n, "max_grid": 1}
        row = {}
    else:
        stats: dict = {}
        eps = float(cfg["baseline_eps"])
        S = baseline_sieve_streaming(oracle, inst.order, k, eps, stats)
        extra = stats
        row = {"eps_prime": eps}
    row["runtime_ms"] = (time.perf_counter() - t0) * 1000.0
    calls = oracle.calls
    with oracle.uncounted():
        f_out = oracle.value(S)
    row.update(variant=name, f_output=f_out, oracle_calls=calls, **extra)
    return row


def run_instance(name: str, doc: dict, cfg: dict) -> list[dict]:
    """All rows for one instance, in (seed, variant then baselines) order."""
    inst = instance_from_doc(doc, name)
    if cfg["memoize"] and inst.oracle.n <= 20:
        inst.oracle.memoize()
    k = int(cfg["k"] or inst.k)
    f_opt = _optimum(inst, k, int(cfg["brute_force_max_work"]))
    rows = []
    for seed in cfg["seeds"]:
        parts = [_variant_row(inst, cfg, k, seed, f_opt)]
        parts += [_baseline_row(inst, b, cfg, k) for b in cfg["baselines"]]
        for part in parts:
            row = dict.fromkeys(COLUMNS)
            row.update(instance=name, n=inst.oracle.n, k=k, seed=seed, f_opt=f_opt,
                       bound_only=f_opt is None)
            row.update(part)
            rows.append(row)
    if f_opt is None:
        outputs = [r["f_output"] for r in rows if r["f_output"] is not None]
        bound = max(outputs) if outputs else None
        for r in rows:
            r["f_opt"] = bound
    for r in rows:
        r["ratio"] = _ratio(r["f_output"], r["f_opt"])
    return rows


def _ratio(f_out, f_opt):
    if f_out is None or f_opt is None:
        return None
    if f_opt <= 0:
        return 1.0
    return f_out / f_opt


def _worker(args):
    return run_instance(*args)


def resolve_workers(cfg: dict) -> int:
    env = os.environ.get(WORKERS_ENV)
    workers = int(env) if env else int(cfg["workers"])
    return max(1, workers)


def run_experiment(config: dict | None, base_dir=None, output=None) -> list[dict]:
    """Run the configured experiment; write <output>.csv and <output>.json when an output stem is set."""
    cfg = normalize_config(config)
    jobs = [(name, doc, cfg) for name, doc in collect_instances(cfg, base_dir)]
    workers = min(resolve_workers(cfg), max(1, len(jobs)))
    log.info("running %d instances x %d seeds on %d workers", len(jobs), len(cfg["seeds"]), workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_worker, jobs))
    else:
        chunks = [_worker(j) for j in jobs]
    rows = [r for chunk in chunks for r in chunk]
    output = output or cfg["output"]
    if output:
        write_rows(rows, output, COLUMNS)
    return rows


def fmt(v) -> str:
    """CSV cell text; the JSON mirror holds the typed values."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows(rows: list[dict], stem, columns: list[str]) -> tuple[Path, Path]:
    stem = Path(stem)
    if stem.suffix in (".csv", ".json"):
        stem = stem.with_suffix("")
    stem.parent.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = stem.with_suffix(".csv"), stem.with_suffix(".json")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(r.get(c)) for c in columns])
    json_path.write_text(json.dumps([{c: r.get(c) for c in columns} for r in rows], indent=1) + "\n")
    return csv_path, json_path


def memory_sweep(k: int, hs, seeds, p: float = 0.125, eps_prime: float = 0.125,
                 alpha: float = 1.0, shuffle: bool = True) -> list[dict]:
    """Hard-instance probe: how much the grid variant holds when w finally arrives, per h.

    The u's and v's arrive in a seeded random order (when ``shuffle``) and w
    always arrives last.  Optimum 2k-1 is confirmed by brute force.
    """
    rows = []
    for h in hs:
        for seed in seeds:
            rng = np.random.default_rng(seed)
            order = [int(u) for u in (rng.permutation(k - 1 + h) if shuffle else range(k - 1 + h))]
            doc = {"type": "hard", "k": k, "h": h, "order": order + [k + h - 1]}
            inst = instance_from_doc(doc)
            oracle = inst.oracle
            f_opt = oracle.value(brute_force(oracle, range(oracle.n), k))
            params = SieveParams(k=k, p=p, alpha=alpha, eps_prime=eps_prime)
            run = SieveRun(oracle, params, _master_seed(rng), estimator="exact")
            for u in inst.order[:-1]:
                run.feed(u)
            held = set()
            for band in run.bands:
                held.update(band.state.x.support())
            run.feed(inst.order[-1])
            S, diag = run.finalize()
            _check_accounting(diag, params)
            rows.append({"k": k, "h": h, "n": oracle.n, "seed": seed, "f_output": diag.f_output,
                         "f_opt": f_opt, "ratio": _ratio(diag.f_output, f_opt),
                         "max_stored": diag.max_stored,
                         "max_distinct_stored": diag.max_distinct_stored,
                         "max_grid": diag.max_grid, "stored_before_w": len(held),
                         "u_stored_before_w": sum(1 for u in held if u in oracle.u_ids)})
    return rows


REPORT_COLUMNS = ["variant", "runs", "errors", "bound_only", "mean_ratio", "sem_ratio",
                  "min_ratio", "mean_oracle_calls", "max_stored", "max_grid", "mean_runtime_ms"]


def _num(s: str):
    return float(s) if s not in ("", None) else None


def report(paths) -> list[dict]:
    """Aggregate run CSVs per variant, in order of first appearance."""
    groups: dict[str, list[dict]] = {}
    for path in paths:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != COLUMNS:
                raise InputError(f"{path}: columns do not match the run report format")
            for r in reader:
                groups.setdefault(r["variant"], []).append(r)
    out = []
    for variant, rs in groups.items():
        ok = [r for r in rs if not r["error"]]
        ratios = [_num(r["ratio"]) for r in ok if r["ratio"]]
        calls = [_num(r["oracle_calls"]) for r in ok]
        runtimes = [_num(r["runtime_ms"]) for r in ok if r["runtime_ms"]]
        out.append({
            "variant": variant,
            "runs": len(rs),
            "errors": len(rs) - len(ok),
            "bound_only": sum(1 for r in rs if r["bound_only"] == "true"),
            "mean_ratio": statistics.fmean(ratios) if ratios else None,
            "sem_ratio": (statistics.stdev(ratios) / math.sqrt(len(ratios))
                          if len(ratios) > 1 else None),
            "min_ratio": min(ratios) if ratios else None,
            "mean_oracle_calls": statistics.fmean(calls) if calls else None,
            "max_stored": int(max(_num(r["max_stored"]) for r in ok)) if ok else None,
            "max_grid": int(max(_num(r["max_grid"]) for r in ok)) if ok else None,
            "mean_runtime_ms": statistics.fmean(runtimes) if runtimes else None,
        })
    return out
