"""Command-line entry point: ``semisieve {gen,run,validate,report,sweep}``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import yaml

from ..errors import CapacityError, InputError
from ..objectives import check_nonnegative, check_submodular
from .experiment import (COLUMNS, REPORT_COLUMNS, SWEEP_COLUMNS, VARIANTS, fmt, memory_sweep,
                         report, run_experiment, write_rows)
from .instances import TYPES, dumps, generate_instance, load_instance, save_instance

VALIDATE_MAX_N = 16


def cmd_gen(args) -> int:
    spec = {"type": args.type, "n": args.n, "k": args.k, "universe": args.universe,
            "density": args.density, "h": args.h, "weighted": not args.unweighted,
            "shuffle": args.shuffle}
    doc = generate_instance({key: v for key, v in spec.items() if v is not None}, args.seed)
    if args.output:
        save_instance(doc, args.output)
        print(f"wrote {args.output}")
    else:
        sys.stdout.write(dumps(doc))
    return 0


def _load_config(path) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        cfg = yaml.safe_load(fh) or {}
    if not isinstance(cfg, dict):
        raise InputError(f"{path}: a run config must be a YAML mapping")
    return cfg


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    for key in ("variant", "p", "alpha", "c", "eps_prime", "offline", "sample_scale",
                "sample_budget", "sample_cap", "k", "workers", "baseline_eps"):
        v = getattr(args, key)
        if v is not None:
            cfg[key] = v
    if args.tau is not None:
        cfg["tau"] = args.tau if args.tau == "opt" else float(args.tau)
    if args.seeds is not None:
        cfg["seeds"] = args.seeds
    if args.instances:
        cfg["instances"] = [str(Path(p).resolve()) for p in args.instances]
    if args.baselines is not None:
        cfg["baselines"] = args.baselines
    base = Path(args.config).parent if args.config else Path(".")
    output = args.output or cfg.get("output")
    if output and args.config and not Path(output).is_absolute() and not args.output:
        output = base / output
    rows = run_experiment(cfg, base_dir=base, output=output)
    if output:
        print(f"wrote {len(rows)} rows to {Path(output).with_suffix('.csv')} and .json")
    else:
        w = csv.writer(sys.stdout)
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([fmt(r[c]) for c in COLUMNS])
    return 0


def cmd_validate(args) -> int:
    status = 0
    for path in args.instances:
        inst = load_instance(path)
        n = inst.oracle.n
        if n > VALIDATE_MAX_N:
            print(f"{path}: n={n} is above {VALIDATE_MAX_N}, exhaustive checks skipped")
            continue
        inst.oracle.memoize()
        nonneg = check_nonnegative(inst.oracle, args.tol)
        submod = check_submodular(inst.oracle, args.tol)
        ok = nonneg and submod
        status |= 0 if ok else 1
        print(f"{path}: n={n} k={inst.k} nonnegative={nonneg} submodular={submod} "
              f"{'OK' if ok else 'FAIL'}")
    return status


def cmd_report(args) -> int:
    rows = report(args.csv)
    if args.output:
        write_rows(rows, args.output, REPORT_COLUMNS)
        print(f"wrote {Path(args.output).with_suffix('.csv')}")
        return 0
    w = csv.writer(sys.stdout)
    w.writerow(REPORT_COLUMNS)
    for r in rows:
        w.writerow([fmt(r[c]) for c in REPORT_COLUMNS])
    return 0


def cmd_sweep(args) -> int:
    rows = memory_sweep(args.k, args.h, range(args.seeds), p=args.p, eps_prime=args.eps_prime,
                        alpha=args.alpha, shuffle=not args.fixed_order)
    write_rows(rows, args.output, SWEEP_COLUMNS)
    print(f"wrote {len(rows)} rows to {Path(args.output).with_suffix('.csv')} and .json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="semisieve", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate an instance file")
    g.add_argument("--type", choices=TYPES, required=True)
    g.add_argument("--n", type=int)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--universe", type=int, help="coverage: universe size")
    g.add_argument("--density", type=float, help="coverage/cut: incidence or edge probability")
    g.add_argument("--h", type=int, help="hard: number of v elements")
    g.add_argument("--unweighted", action="store_true")
    g.add_argument("--shuffle", action="store_true", help="hard: shuffle u's and v's (w stays last)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run an experiment from a YAML config and/or flags")
    r.add_argument("config", nargs="?")
    r.add_argument("--instances", nargs="+")
    r.add_argument("--variant", choices=VARIANTS)
    r.add_argument("--k", type=int)
    r.add_argument("--p", type=float)
    r.add_argument("--alpha", type=float)
    r.add_argument("--c", type=float)
    r.add_argument("--eps-prime", dest="eps_prime", type=float)
    r.add_argument("--tau", help="known_tau guess: a number or 'opt'")
    r.add_argument("--offline", choices=("brute_force", "random_greedy"))
    r.add_argument("--sample-scale", dest="sample_scale", type=float)
    r.add_argument("--sample-budget", dest="sample_budget", type=int)
    r.add_argument("--sample-cap", dest="sample_cap", type=int)
    r.add_argument("--seeds", type=int, help="run seeds 0..SEEDS-1")
    r.add_argument("--baselines", nargs="*", choices=("greedy", "sieve_streaming"))
    r.add_argument("--baseline-eps", dest="baseline_eps", type=float)
    r.add_argument("--workers", type=int, help="overridden by SEMISIEVE_WORKERS")
    r.add_argument("-o", "--output", help="output stem; writes STEM.csv and STEM.json")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="exhaustive non-negativity and submodularity checks")
    v.add_argument("instances", nargs="+")
    v.add_argument("--tol", type=float, default=1e-9)
    v.set_defaults(func=cmd_validate)

    rp = sub.add_parser("report", help="aggregate run CSVs per variant")
    rp.add_argument("csv", nargs="+")
    rp.add_argument("-o", "--output")
    rp.set_defaults(func=cmd_report)

    s = sub.add_parser("sweep", help="hard-instance memory sweep over h")
    s.add_argument("--k", type=int, default=3)
    s.add_argument("--h", type=int, nargs="+", default=[2, 4, 6, 8, 10])
    s.add_argument("--seeds", type=int, default=10)
    s.add_argument("--p", type=float, default=0.125)
    s.add_argument("--eps-prime", dest="eps_prime", type=float, default=0.125)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--fixed-order", action="store_true", help="u's, then v's, then w")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, CapacityError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
