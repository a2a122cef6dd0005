"""Instance files: JSON documents describing an objective plus k and an arrival order.

See docs/formats.md for the schema.  Generated files are byte-identical for
the same (spec, seed).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import InputError
from ..objectives import (CoverageOracle, CutOracle, HardOracle, ModularOracle, ValueOracle,
                          hard_order, random_coverage, random_cut)

TYPES = ("coverage", "cut", "hard", "modular")


@dataclass
class Instance:
    name: str
    oracle: ValueOracle
    k: int
    order: list[int]
    doc: dict


def generate_instance(spec: dict, seed: int) -> dict:
    """Build an instance document from a generator spec.

    spec keys: ``type`` plus, per type,
      coverage: n, k, universe, density, weighted (default true)
      cut:      n, k, density, weighted (default true)
      hard:     k, h, shuffle (default false; shuffles u's and v's, w stays last)
      modular:  n, k (weights uniform in [0, 1))
    """
    kind = spec.get("type")
    if kind not in TYPES:
        raise InputError(f"instance type must be one of {TYPES}, got {kind!r}")
    rng = np.random.default_rng(seed)
    try:
        k = int(spec["k"])
        if kind == "hard":
            h = int(spec["h"])
            if k < 1 or h < 1:
                raise InputError("hard instance needs k >= 1 and h >= 1")
            order = hard_order(k, h, rng if spec.get("shuffle") else None)
            doc = {"type": "hard", "k": k, "h": h, "n": k + h, "order": order}
        else:
            n = int(spec["n"])
            if n < 0 or k < 1:
                raise InputError("need n >= 0 and k >= 1")
            weighted = bool(spec.get("weighted", True))
            if kind == "coverage":
                density = float(spec["density"])
                inst = random_coverage(n, int(spec["universe"]), density, rng, weighted)
                doc = {"type": "coverage", "n": n, "k": k,
                       "universe_weights": [round(w, 12) for w in inst.universe_weights],
                       "covers": inst.covers}
            elif kind == "cut":
                density = float(spec["density"])
                inst = random_cut(n, density, rng, weighted)
                doc = {"type": "cut", "n": n, "k": k,
                       "edges": [[a, b, round(w, 12)] for a, b, w in inst.edges]}
            else:
                doc = {"type": "modular", "n": n, "k": k,
                       "weights": [round(float(w), 12) for w in rng.random(n)]}
            doc["order"] = list(range(n))
    except KeyError as e:
        raise InputError(f"instance spec for {kind!r} is missing {e}") from None
    doc["seed"] = int(seed)
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def save_instance(doc: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(doc))
    return path


def oracle_from_doc(doc: dict) -> ValueOracle:
    kind = doc.get("type")
    labels = doc.get("labels")
    try:
        if kind == "coverage":
            return CoverageOracle(doc["universe_weights"], doc["covers"], labels)
        if kind == "cut":
            return CutOracle(int(doc["n"]), [tuple(e) for e in doc["edges"]], labels)
        if kind == "hard":
            return HardOracle(int(doc["k"]), int(doc["h"]), doc.get("order"))
        if kind == "modular":
            return ModularOracle(doc["weights"], labels)
    except KeyError as e:
        raise InputError(f"instance of type {kind!r} is missing {e}") from None
    raise InputError(f"instance type must be one of {TYPES}, got {kind!r}")


def instance_from_doc(doc: dict, name: str = "instance") -> Instance:
    oracle = oracle_from_doc(doc)
    order = [int(u) for u in doc.get("order", range(oracle.n))]
    if sorted(order) != sorted(set(order)) or any(not 0 <= u < oracle.n for u in order):
        raise InputError("order must list distinct element ids")
    k = int(doc.get("k", 1))
    if "n" in doc and int(doc["n"]) != oracle.n:
        raise InputError(f"declared n={doc['n']} but the objective has {oracle.n} elements")
    return Instance(doc.get("name", name), oracle, k, order, doc)


def load_instance(path) -> Instance:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: not valid JSON ({e})") from None
    return instance_from_doc(doc, path.stem)
