"""JSON fixtures: named spaces, modules, maps, partitions and operators.

Layout::

    {
      "spaces":     {"L": {"metric": [[0, 1], [1, 0]], "thresholds": [0, 1]},
                     "P": {"line": 4},
                     "C": {"clusters": [2, 2]},
                     "R": {"n": 3, "ladder": [{"pairs": [[0, 0], ...]}, ...]}},
      "modules":    {"M": {"space": "L", "atoms": [[0], [1]], "dims": [1, 1]},
                     "U": {"space": "L", "uniform": 2}},
      "maps":       {"f": {"source": "L", "target": "L", "pairs": [[y, x], ...]},
                     "g": {"source": "L", "target": "L", "function": [0, 1]},
                     "h": {"source": "L", "target": "L", "relation": {"pairs": [[0, 0]]}}},
      "partitions": {"p": {"space": "L", "blocks": [[0, 1]]}},
      "operators":  {"t": {"module": "M", "matrix": [[[re, im], ...], ...], "tolerance": 0}}
    }

Distances may be the string ``"inf"``.  Operator modules are a name or a
``[domain, codomain]`` pair; matrix entries are ``[re, im]`` pairs or reals.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FixtureError, InputError
from .geomodule import GeoModule, uniform_module
from .maps import ControlledMap, check_controlled
from .operators import BlockOperator
from .relations import FiniteRelation, relation_from_literal
from .spaces import CoarseSpace, Partition, clusters_space, line_space

SECTIONS = ("spaces", "modules", "maps", "partitions", "operators")


@dataclass
class Fixture:
    spaces: dict[str, CoarseSpace] = field(default_factory=dict)
    modules: dict[str, GeoModule] = field(default_factory=dict)
    maps: dict[str, ControlledMap] = field(default_factory=dict)
    partitions: dict[str, Partition] = field(default_factory=dict)
    operators: dict[str, BlockOperator] = field(default_factory=dict)
    sha256: str = ""
    name: str = ""

    def get(self, section: str, key: str):
        table = getattr(self, section)
        if key not in table:
            known = ", ".join(sorted(table)) or "none"
            raise FixtureError(f"unknown {section[:-1]} {key!r} (known: {known})", f"{section}.{key}")
        return table[key]


def load_fixture(path) -> Fixture:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise FixtureError(f"cannot read fixture: {exc}", str(path)) from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise FixtureError(f"invalid JSON: {exc}", path.name) from exc
    fx = parse_fixture(data)
    fx.sha256 = hashlib.sha256(raw).hexdigest()
    fx.name = path.name
    return fx


def parse_fixture(data: dict) -> Fixture:
    if not isinstance(data, dict):
        raise FixtureError("fixture must be a JSON object")
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise FixtureError(f"unknown sections {sorted(unknown)}")
    fx = Fixture()
    for section, parser in (("spaces", _space), ("modules", _module), ("maps", _map),
                            ("partitions", _partition), ("operators", _operator)):
        for key, entry in (data.get(section) or {}).items():
            loc = f"{section}.{key}"
            try:
                getattr(fx, section)[key] = parser(fx, entry, key)
            except FixtureError:
                raise
            except InputError as exc:
                raise FixtureError(str(exc), loc) from exc
            except (KeyError, TypeError, ValueError) as exc:
                raise FixtureError(f"malformed entry: {exc!r}", loc) from exc
    return fx


def _space(fx: Fixture, entry: dict, key: str) -> CoarseSpace:
    labels = entry.get("labels")
    if "metric" in entry:
        return CoarseSpace.from_metric(entry["metric"], entry["thresholds"], labels=labels, name=key)
    if "line" in entry:
        return line_space(int(entry["line"]), entry.get("thresholds"), name=key)
    if "clusters" in entry:
        return clusters_space(entry["clusters"], float(entry.get("intra", 1.0)), tuple(entry.get("thresholds", (0, 1))), name=key)
    if "ladder" in entry:
        return CoarseSpace.from_ladder_literals(int(entry["n"]), entry["ladder"], labels=labels, name=key)
    raise FixtureError("space needs one of metric, line, clusters or ladder", f"spaces.{key}")


def _module(fx: Fixture, entry: dict, key: str) -> GeoModule:
    space = fx.get("spaces", entry["space"])
    if "uniform" in entry:
        return uniform_module(space, int(entry["uniform"]), name=key)
    atoms = Partition(space.n, tuple(frozenset(b) for b in entry["atoms"]))
    return GeoModule(space, atoms, entry["dims"], name=key)


def _map(fx: Fixture, entry: dict, key: str) -> ControlledMap:
    X = fx.get("spaces", entry["source"])
    Y = fx.get("spaces", entry["target"])
    if "function" in entry:
        pairs = [(y, x) for x, y in enumerate(entry["function"]) if y is not None]
    elif "relation" in entry:
        return check_controlled(X, Y, relation_from_literal(entry["relation"], X.ground, Y.ground))
    else:
        pairs = [tuple(p) for p in entry["pairs"]]
    return check_controlled(X, Y, FiniteRelation.from_pairs(X.ground, Y.ground, pairs))


def _partition(fx: Fixture, entry: dict, key: str) -> Partition:
    space = fx.get("spaces", entry["space"])
    return Partition(space.n, tuple(frozenset(b) for b in entry["blocks"]))


def parse_matrix(rows) -> np.ndarray:
    out = []
    for row in rows:
        line = []
        for v in row:
            if isinstance(v, (list, tuple)):
                if len(v) != 2:
                    raise ValueError("complex entries are [re, im] pairs")
                line.append(complex(float(v[0]), float(v[1])))
            else:
                line.append(complex(float(v)))
        out.append(line)
    return np.array(out, dtype=complex)


def _operator(fx: Fixture, entry: dict, key: str) -> BlockOperator:
    mod = entry["module"]
    if isinstance(mod, list):
        dom, cod = fx.get("modules", mod[0]), fx.get("modules", mod[1])
    else:
        dom = cod = fx.get("modules", mod)
    mat = parse_matrix(entry["matrix"]) if entry["matrix"] else np.zeros((cod.D, dom.D), dtype=complex)
    tol = entry.get("tolerance")
    return BlockOperator(dom, cod, mat, None if tol is None else float(tol))


def matrix_literal(m: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(m, dtype=complex)]
