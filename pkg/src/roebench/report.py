"""Conversion of results into canonical JSON-ready values and text tables."""

from __future__ import annotations

import dataclasses
import json
import math

import numpy as np

from .geomodule import GeoModule
from .operators import BlockOperator
from .relations import FiniteRelation
from .spaces import CoarseSpace, Partition

FLOAT_DIGITS = 12


def _float(x: float):
    if math.isinf(x):
        return "unbounded" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    # rounding keeps reports byte-stable across platforms with tiny last-bit noise
    return float(round(x, FLOAT_DIGITS)) + 0.0


def _key(k) -> str:
    if isinstance(k, tuple):
        return ",".join(str(_key(v)) for v in k)
    return str(k)


def jsonable(obj):
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return [_float(obj.real), _float(obj.imag)]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj) and np.any(obj.imag):
            return [[jsonable(complex(v)) for v in row] for row in obj] if obj.ndim == 2 else [jsonable(complex(v)) for v in obj]
        return jsonable(np.real(obj).tolist())
    if isinstance(obj, FiniteRelation):
        return [list(p) for p in obj.pairs()]
    if isinstance(obj, Partition):
        return obj.as_lists()
    if isinstance(obj, (frozenset, set)):
        return sorted(jsonable(v) for v in obj)
    if isinstance(obj, BlockOperator):
        return {"shape": list(obj.matrix.shape), "tolerance": _float(obj.tolerance)}
    if isinstance(obj, GeoModule):
        return obj.to_literal()
    if isinstance(obj, CoarseSpace):
        return {"n": obj.n, "k": obj.k, "name": obj.name}
    if dataclasses.is_dataclass(obj):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj) if f.repr}
    if isinstance(obj, dict):
        return {_key(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(report: dict) -> str:
    return json.dumps(jsonable(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def render_text(report: dict) -> str:
    """Indented key/value listing; short lists stay on one line."""
    lines: list[str] = []

    def walk(v, indent: int, label: str):
        pad = "  " * indent
        if isinstance(v, dict):
            lines.append(f"{pad}{label}:" if label else "")
            for k in sorted(v):
                walk(v[k], indent + (1 if label else 0), k)
        elif isinstance(v, list) and v and any(isinstance(x, (dict, list)) for x in v) and len(json.dumps(v)) > 80:
            lines.append(f"{pad}{label}:")
            for idx, x in enumerate(v):
                walk(x, indent + 1, f"[{idx}]")
        else:
            lines.append(f"{pad}{label}: {json.dumps(v)}")

    walk(jsonable(report), 0, "")
    return "\n".join(line for line in lines if line) + "\n"
