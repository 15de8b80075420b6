"""Command-line front end.

Exit codes: 0 success, 1 verification or construction failure, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .constructions import (
    KINDS,
    approximate_unit,
    band_decompose,
    component_decompose,
    conditional_expectation,
    cover,
    covers_are_close,
    ktheory_unitary,
)
from .errors import InputError, RoebenchError
from .fixtures import Fixture, load_fixture, matrix_literal
from .maps import embedding_modulus, is_coarse_equivalence, is_proper
from .operators import DEFAULT_ATOM_LIMIT, BlockOperator, analyze, operator_norm
from .report import dumps, render_text
from .spaces import scale_repr
from .suites import SuiteContext, run_suite


def _with_tolerance(t: BlockOperator, tol: float | None) -> BlockOperator:
    return t if tol is None else t.with_matrix(t.matrix, tol)


def _scales(seq):
    return [scale_repr(s) for s in seq]


# -- commands --------------------------------------------------------------------------


def cmd_analyze(fx: Fixture, args) -> tuple[dict, bool]:
    t = _with_tolerance(fx.get("operators", args.operator), args.tolerance)
    r = analyze(t, args.atom_limit, args.mode)
    ql = list(r.ql_profile) if r.ql_mode == "exact" else [{"lower": b.lower, "upper": b.upper} for b in r.ql_profile]
    res = {
        "operator": args.operator,
        "support_atoms": r.support.atoms,
        "support_points": r.support.points,
        "propagation_scale": scale_repr(r.propagation_scale),
        "point_propagation_scale": scale_repr(r.point_propagation_scale),
        "ql_mode": r.ql_mode,
        "ql_profile": ql,
        "trunc_profile": {"values": list(r.trunc_profile.values), "witness": list(r.trunc_profile.witness),
                          "label": "upper bound"},
        "controlled_modulus": None if r.controlled_modulus is None else _scales(r.controlled_modulus),
        "not_controlled": r.not_controlled_reason,
        "proper": r.proper,
        "properness_characterizations_agree": r.properness.agree,
        "local_rank": {"left": list(r.local_rank.left), "right": list(r.local_rank.right)},
        "tolerance": r.tolerance,
    }
    return res, True


def cmd_classify_module(fx: Fixture, args) -> tuple[dict, bool]:
    m = fx.get("modules", args.module)
    r = m.classify()
    return {
        "module": args.module,
        "D": m.D,
        "nondegeneracy_scale": scale_repr(r.nondegeneracy_scale),
        "admissibility_scale": scale_repr(r.admissibility_scale),
        "discreteness_scale": scale_repr(r.discreteness_scale),
        "faithfulness_scale": scale_repr(r.faithfulness_scale),
        "ampleness": "unbounded" if r.ampleness == float("inf") else r.ampleness,
        "rank": r.rank,
    }, True


def cmd_check_map(fx: Fixture, args) -> tuple[dict, bool]:
    f = fx.get("maps", args.map)
    proper = is_proper(f)
    omega = embedding_modulus(f)
    eq = is_coarse_equivalence(f)
    return {
        "map": args.map,
        "controlled_modulus": _scales(f.modulus),
        "everywhere_defined_scale": scale_repr(f.everywhere_defined_scale),
        "surjectivity_scale": scale_repr(f.surjectivity_scale),
        "proper": proper.ok,
        "proper_witness": proper.witness,
        "embedding_modulus": None if omega is None else _scales(omega),
        "coarse_equivalence": eq.ok,
        "equivalence_reason": eq.reason,
    }, True


def _cover_result(c) -> dict:
    return {
        "kind": c.kind,
        "certificate": None if c.cover_certificate.scales is None else list(c.cover_certificate.scales),
        "phi": list(c.phi),
        "source_blocks": c.source_blocks,
        "target_blocks": [sorted(b) for b in c.target_blocks],
        "injections": [list(p) for p in c.injections],
        "domain_scale": c.domain_scale,
        "identity_error": c.identity_error,
        "propagation_scale": None,
    }


def cmd_cover(fx: Fixture, args) -> tuple[dict, bool]:
    f = fx.get("maps", args.map)
    mx, my = fx.get("modules", args.source), fx.get("modules", args.target)
    c = cover(f, mx, my, args.kind, seed=args.seed)
    res = _cover_result(c)
    res.pop("propagation_scale")
    ok = c.cover_certificate.present and c.identity_error <= 1e-10
    if args.write_operator:
        lit = {"module": [args.source, args.target], "matrix": matrix_literal(c.operator.matrix), "tolerance": 0}
        Path(args.write_operator).write_text(json.dumps(lit, sort_keys=True) + "\n")
        res["operator_file"] = Path(args.write_operator).name
    return res, ok


def _partition(fx: Fixture, name):
    return None if name is None else fx.get("partitions", name)


def cmd_band(fx: Fixture, args) -> tuple[dict, bool]:
    t = _with_tolerance(fx.get("operators", args.operator), args.tolerance)
    bd = band_decompose(t, _partition(fx, args.partition))
    total = sum((p.matrix for p in bd.pieces), np.zeros_like(t.matrix))
    exact = bool(np.array_equal(total, t.matrix))
    ok = exact and len(bd.pieces) <= bd.max_degree + 1
    return {"pieces": len(bd.pieces), "max_degree": bd.max_degree, "coloring": bd.coloring,
            "reconstructs": exact}, ok


def cmd_expect(fx: Fixture, args) -> tuple[dict, bool]:
    t = _with_tolerance(fx.get("operators", args.operator), args.tolerance)
    p = _partition(fx, args.partition)
    e = conditional_expectation(t, p)
    idem = bool(np.array_equal(conditional_expectation(e, p).matrix, e.matrix))
    return {"matrix": matrix_literal(e.matrix), "norm": e.norm, "input_norm": t.norm,
            "idempotent": idem, "contractive": e.norm <= t.norm + 1e-12}, idem


def cmd_approx_unit(fx: Fixture, args) -> tuple[dict, bool]:
    t = _with_tolerance(fx.get("operators", args.operator), args.tolerance)
    w = approximate_unit(t, args.epsilon)
    measured = w.measured
    if args.inject_fault:
        measured = operator_norm(t.matrix)
    return {
        "epsilon": args.epsilon,
        "certified_bound": w.certified_bound,
        "measured": measured,
        "even_error": w.even_error,
        "odd_error": w.odd_error,
        "local_ranks": list(w.local_ranks),
        "anuli": [{"component": a.component, "index": a.index, "atoms": list(a.atoms),
                   "kept_rank": a.kept_rank, "residual": a.residual} for a in w.anuli],
        "fault_injected": bool(args.inject_fault),
    }, measured <= w.certified_bound


def cmd_k_unitary(fx: Fixture, args) -> tuple[dict, bool]:
    f = fx.get("maps", args.map)
    mx, my = fx.get("modules", args.source), fx.get("modules", args.target)
    seed = 0 if args.seed is None else args.seed
    c0 = cover(f, mx, my, "isometry", seed=seed)
    c1 = cover(f, mx, my, "isometry", seed=seed + 1)
    k = ktheory_unitary(c0, c1, seed=seed)
    close = covers_are_close(c0, c1)
    return {
        "block_scales": _scales(k.block_scales),
        "self_adjoint_error": k.self_adjoint_error,
        "involution_error": k.involution_error,
        "unitary_error": k.unitary_error,
        "conjugation_error": k.conjugation_error,
        "covers_close": {"scales": {k2: scale_repr(v) for k2, v in close.scales.items()},
                         "predicted": {k2: scale_repr(v) for k2, v in close.predicted.items()}},
    }, k.ok and close.ok


def cmd_components(fx: Fixture, args) -> tuple[dict, bool]:
    t = _with_tolerance(fx.get("operators", args.operator), args.tolerance)
    cd = component_decompose(t)
    return {
        "components": cd.components,
        "piece_scales": _scales(cd.piece_scales),
        "common_scale": scale_repr(cd.common_scale),
        "propagation_scale": scale_repr(cd.propagation),
        "cross_blocks_zero": cd.cross_blocks_zero,
        "reconstructs": cd.reconstructs,
    }, cd.reconstructs == (cd.propagation != float("inf"))


def cmd_verify(fx: Fixture | None, args) -> tuple[dict, bool]:
    ctx = SuiteContext(fx, np.random.default_rng(0 if args.seed is None else args.seed), args.atom_limit,
                       args.inject_fault, args.count)
    laws = run_suite(args.suite, ctx)
    return {"suite": args.suite, "laws": laws}, all(l["passed"] for l in laws)


COMMANDS = {
    "analyze": cmd_analyze,
    "classify-module": cmd_classify_module,
    "check-map": cmd_check_map,
    "cover": cmd_cover,
    "band": cmd_band,
    "expect": cmd_expect,
    "approx-unit": cmd_approx_unit,
    "k-unitary": cmd_k_unitary,
    "components": cmd_components,
    "verify": cmd_verify,
}


# -- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tolerance", type=float, default=None, help="zero tolerance for blocks (default: relative 1e-12)")
    common.add_argument("--atom-limit", type=int, default=DEFAULT_ATOM_LIMIT, help="largest atom count for exact quasi-locality")
    common.add_argument("--seed", type=int, default=None, help="seed for tie-breaking and random instances")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")

    p = argparse.ArgumentParser(prog="roebench", description="Finite coarse geometry and operator workbench.")
    p.add_argument("--version", action="version", version=f"roebench {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_, *, fixture=True):
        sp = sub.add_parser(name, parents=[common], help=help_)
        if fixture:
            sp.add_argument("fixture", help="fixture JSON file")
        return sp

    sp = add("analyze", "support, propagation and quasi-locality report")
    sp.add_argument("operator")
    sp.add_argument("--mode", choices=("exact", "bounds"), default=None)
    add("classify-module", "module scales and ampleness").add_argument("module")
    add("check-map", "controlledness, properness, embedding and equivalence").add_argument("map")
    sp = add("cover", "covering (partial) isometry or unitary of a map")
    sp.add_argument("map")
    sp.add_argument("--source", required=True, help="module on the source space")
    sp.add_argument("--target", required=True, help="module on the target space")
    sp.add_argument("--kind", choices=KINDS, default="isometry")
    sp.add_argument("--write-operator", default=None, help="write the operator as a fixture entry")
    for name, help_ in (("band", "band decomposition"), ("expect", "block-diagonal conditional expectation")):
        sp = add(name, help_)
        sp.add_argument("operator")
        sp.add_argument("--partition", default=None, help="partition name (default: atoms)")
    sp = add("approx-unit", "projection approximately fixing an operator")
    sp.add_argument("operator")
    sp.add_argument("--epsilon", type=float, default=0.1)
    sp.add_argument("--inject-fault", action="store_true", help="negative control: discard the constructed projection")
    sp = add("k-unitary", "2x2 unitary comparing two covering isometries")
    sp.add_argument("map")
    sp.add_argument("--source", required=True)
    sp.add_argument("--target", required=True)
    add("components", "decomposition along coarse components").add_argument("operator")
    sp = add("verify", "run a verification suite", fixture=False)
    sp.add_argument("suite")
    sp.add_argument("--fixture", default=None)
    sp.add_argument("--count", type=int, default=20, help="random instances per law batch")
    sp.add_argument("--inject-fault", action="store_true", help="negative control for the approx-unit suite")
    return p


def _inputs(fx: Fixture | None, args) -> dict:
    names = {k: v for k, v in vars(args).items()
             if k in ("operator", "module", "map", "source", "target", "partition", "suite", "kind") and v is not None}
    out = {"names": names}
    if fx is not None:
        out["fixture"] = {"file": fx.name, "sha256": fx.sha256}
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    fx = None
    try:
        path = getattr(args, "fixture", None)
        if path is not None:
            fx = load_fixture(path)
        results, ok = COMMANDS[args.command](fx, args)
        code = 0 if ok else 1
        error = None
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RoebenchError as exc:
        results, code = None, 1
        error = {"type": type(exc).__name__, "message": str(exc)}
    report = {
        "command": args.command,
        "inputs": _inputs(fx, args),
        "results": results,
        "ok": code == 0,
        "version": __version__,
        "settings": {"tolerance": args.tolerance, "atom_limit": args.atom_limit, "seed": args.seed},
    }
    if error is not None:
        report["error"] = error
        print(f"error: {error['message']}", file=sys.stderr)
    text = dumps(report) if args.format == "json" else render_text(report)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
