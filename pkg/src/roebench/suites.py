"""Verification suites: named batches of laws run on fixture contents and seeded random instances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .constructions import (
    approximate_unit,
    band_decompose,
    commutant_dimension,
    component_decompose,
    conditional_expectation,
    cover,
    covers_are_close,
    ktheory_unitary,
)
from .errors import UnknownSuite
from .fixtures import Fixture
from .generators import (
    UNIT_ALPHABET,
    random_controlled_partition,
    random_finite_propagation,
    random_map,
    random_module,
    random_operator,
    random_relation,
    random_space,
)
from .geomodule import uniform_module
from .maps import closeness, is_coarse_equivalence, partition_quotient_equivalence
from .operators import (
    BlockOperator,
    compose_support_bound_check,
    operator_norm,
    point_support,
    propagation_scale,
    ql_arithmetic_check,
    ql_profile,
    trunc_profile,
)
from .relations import GroundSet, compose, contains, product_image, transpose
from .spaces import UNBOUNDED


@dataclass
class Law:
    name: str
    checked: int = 0
    failed: int = 0
    first_failure: str | None = None

    def record(self, ok: bool, detail: str = "") -> None:
        self.checked += 1
        if not ok:
            self.failed += 1
            if self.first_failure is None:
                self.first_failure = detail

    @property
    def passed(self) -> bool:
        return self.failed == 0

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "checked": self.checked,
                "failed": self.failed, "first_failure": self.first_failure}


@dataclass
class SuiteContext:
    fixture: Fixture | None
    rng: np.random.Generator
    atom_limit: int = 16
    inject_fault: bool = False
    count: int = 20


def _laws(*names: str) -> dict[str, Law]:
    return {n: Law(n) for n in names}


def _fixture_ops(ctx: SuiteContext) -> list[BlockOperator]:
    if ctx.fixture is None:
        return []
    return [ctx.fixture.operators[k] for k in sorted(ctx.fixture.operators)]


def _random_small_module(ctx: SuiteContext, max_n: int = 6, max_dim: int = 3, min_dim: int = 0):
    rng = ctx.rng
    n = int(rng.integers(2, max_n + 1))
    X = random_space(rng, n, components=int(rng.integers(1, 3)))
    return random_module(rng, X, max_dim=max_dim, min_dim=min_dim)


def suite_relations(ctx: SuiteContext) -> dict[str, Law]:
    laws = _laws("associativity", "transpose-anti-homomorphism", "image-functoriality", "product-image")
    rng = ctx.rng
    for _ in range(ctx.count * 5):
        g = [GroundSet(int(rng.integers(1, 8))) for _ in range(4)]
        a, b, c = (random_relation(rng, g[i], g[i + 1]) for i in range(3))
        laws["associativity"].record(compose(c, compose(b, a)) == compose(compose(c, b), a))
        laws["transpose-anti-homomorphism"].record(transpose(compose(b, a)) == compose(transpose(a), transpose(b)))
        m = int(rng.integers(0, 1 << g[0].size))
        laws["image-functoriality"].record(compose(b, a).image_mask(m) == b.image_mask(a.image_mask(m)))
        e, e2 = random_relation(rng, g[1], g[2]), random_relation(rng, g[0], g[3])
        d = random_relation(rng, g[0], g[1])
        brute = {(y, y2) for (y, x) in e.pairs() for (y2, x2) in e2.pairs() if (x, x2) in d}
        laws["product-image"].record(set(product_image(e, e2, d).pairs()) == brute)
    return laws


def suite_supports(ctx: SuiteContext) -> dict[str, Law]:
    laws = _laws("sum", "adjoint", "product")
    pairs = []
    ops = _fixture_ops(ctx)
    for t in ops:
        for s in ops:
            if s.codomain is t.domain:
                pairs.append((t, s))
    for _ in range(ctx.count * 2):
        m = _random_small_module(ctx)
        pairs.append(tuple(random_operator(ctx.rng, m, m, 0.5, UNIT_ALPHABET) for _ in range(2)))
    for t, s in pairs:
        chk = compose_support_bound_check(t, s)
        laws["product"].record(chk.ok, f"product support escapes the bound for D={t.domain.D}")
        laws["adjoint"].record(chk.adjoint_ok)
        if chk.sum_ok is not None:
            laws["sum"].record(chk.sum_ok)
    return laws


def suite_ql_arithmetic(ctx: SuiteContext) -> dict[str, Law]:
    laws = _laws("ql-below-trunc", "bounds-sandwich", "monotone", "arithmetic")
    ops = [t for t in _fixture_ops(ctx) if t.domain is t.codomain and t.domain.n_atoms <= ctx.atom_limit]
    for _ in range(ctx.count):
        m = _random_small_module(ctx)
        ops.append(random_operator(ctx.rng, m, m, 0.6))
    for t in ops:
        q = ql_profile(t, "exact", ctx.atom_limit)
        tr = trunc_profile(t).values
        bd = ql_profile(t, "bounds")
        laws["ql-below-trunc"].record(all(a <= b + 1e-10 for a, b in zip(q, tr)))
        laws["bounds-sandwich"].record(all(x.lower - 1e-10 <= v <= x.upper + 1e-10 for v, x in zip(q, bd)))
        laws["monotone"].record(all(a >= b - 1e-12 for a, b in zip(q, q[1:])) and all(a >= b for a, b in zip(tr, tr[1:])))
        s = random_operator(ctx.rng, t.domain, t.domain, 0.6)
        laws["arithmetic"].record(ql_arithmetic_check(s, t, ctx.atom_limit).ok)
    return laws


def suite_cartan(ctx: SuiteContext) -> dict[str, Law]:
    laws = _laws("idempotent", "contractive", "bimodule", "faithful", "commutant", "band-reconstruct", "band-injective", "band-pieces")
    mods = [] if ctx.fixture is None else [ctx.fixture.modules[k] for k in sorted(ctx.fixture.modules)]
    mods += [_random_small_module(ctx) for _ in range(ctx.count)]
    rng = ctx.rng
    for m in mods:
        t = random_operator(rng, m, m, 0.7)
        et = conditional_expectation(t)
        laws["idempotent"].record(np.array_equal(conditional_expectation(et).matrix, et.matrix))
        laws["contractive"].record(et.norm <= t.norm + 1e-12)
        x = conditional_expectation(random_operator(rng, m, m, 0.7))
        y = conditional_expectation(random_operator(rng, m, m, 0.7))
        lhs = conditional_expectation(x @ t @ y).matrix
        rhs = x.matrix @ et.matrix @ y.matrix
        laws["bimodule"].record(operator_norm(lhs - rhs) <= 1e-12 * max(1.0, operator_norm(rhs)))
        ett = conditional_expectation(t.adjoint() @ t)
        laws["faithful"].record(not (ett.norm == 0 and t.norm > 1e-10))
        com = commutant_dimension(None, m)
        laws["commutant"].record(com.dimension == len(m.nontrivial), f"{com.dimension} vs {len(m.nontrivial)}")
        tb = random_finite_propagation(rng, m)
        bd = band_decompose(tb)
        total = sum((p.matrix for p in bd.pieces), np.zeros_like(tb.matrix))
        laws["band-reconstruct"].record(np.array_equal(total, tb.matrix))
        laws["band-pieces"].record(len(bd.pieces) <= bd.max_degree + 1)
        inj = True
        for c in set(bd.coloring.values()):
            cells = [k for k, v in bd.coloring.items() if v == c]
            inj &= len({b for b, _ in cells}) == len(cells) == len({a for _, a in cells})
        laws["band-injective"].record(inj)
    return laws


def suite_approx_unit(ctx: SuiteContext) -> dict[str, Law]:
    laws = _laws("projection", "discreteness-gauge", "local-rank", "certified-bound")
    rng = ctx.rng
    ops = [t for t in _fixture_ops(ctx) if t.domain is t.codomain and propagation_scale(t) != UNBOUNDED]
    for _ in range(ctx.count):
        m = _random_small_module(ctx, max_n=10, max_dim=4)
        ops.append(random_finite_propagation(rng, m))
    for t in ops:
        m = t.domain
        for eps in (0.5, 0.1, 0.01):
            w = approximate_unit(t, eps)
            p = w.p_lambda.matrix
            if ctx.inject_fault:
                p = np.zeros_like(p)
            laws["projection"].record(operator_norm(p @ p - p) <= 1e-10 and operator_norm(p - p.conj().T) <= 1e-12)
            laws["discreteness-gauge"].record(contains(m.discreteness_gauge, point_support(BlockOperator(m, m, p, 0.0))))
            laws["local-rank"].record(all(r <= d for r, d in zip(w.local_ranks, m.dims)))
            measured = operator_norm(t.matrix - p @ t.matrix)
            laws["certified-bound"].record(measured <= w.certified_bound, f"measured {measured:.3g} > {w.certified_bound:.3g}")
    return laws


def suite_cover_closeness(ctx: SuiteContext) -> dict[str, Law]:
    laws = _laws("kind-identity", "certificate", "close-covers")
    rng = ctx.rng
    for _ in range(ctx.count):
        X = random_space(rng, int(rng.integers(2, 6)), components=int(rng.integers(1, 3)))
        Y = random_space(rng, int(rng.integers(2, 6)), components=int(rng.integers(1, 3)))
        mx = random_module(rng, X, max_dim=2, min_dim=1)
        f = random_map(rng, X, Y)
        my = uniform_module(Y, mx.D)
        c0 = cover(f, mx, my, "isometry", seed=None)
        c1 = cover(f, mx, my, "isometry", seed=int(rng.integers(1 << 30)))
        for c in (c0, c1):
            laws["kind-identity"].record(c.identity_error <= 1e-10)
            laws["certificate"].record(c.cover_certificate.present)
        laws["close-covers"].record(covers_are_close(c0, c1).ok)
    return laws


def suite_k_unitary(ctx: SuiteContext) -> dict[str, Law]:
    laws = _laws("involution", "conjugation", "finite-propagation")
    rng = ctx.rng
    for _ in range(max(1, ctx.count // 2)):
        X = random_space(rng, int(rng.integers(2, 6)))
        Y = random_space(rng, int(rng.integers(2, 6)))
        mx = random_module(rng, X, max_dim=2, min_dim=1)
        my = uniform_module(Y, 2 * mx.D)
        f = random_map(rng, X, Y)
        c0 = cover(f, mx, my, "isometry", seed=int(rng.integers(1 << 30)))
        c1 = cover(f, mx, my, "isometry", seed=int(rng.integers(1 << 30)))
        k = ktheory_unitary(c0, c1, seed=int(rng.integers(1 << 30)))
        laws["involution"].record(max(k.self_adjoint_error, k.involution_error, k.unitary_error) < 1e-10)
        laws["conjugation"].record(k.conjugation_error < 1e-10)
        laws["finite-propagation"].record(all(s != UNBOUNDED for s in k.block_scales))
    return laws


def suite_coarse_maps(ctx: SuiteContext) -> dict[str, Law]:
    laws = _laws("closeness-reflexive", "closeness-symmetric", "quotient-equivalence")
    rng = ctx.rng
    for _ in range(ctx.count):
        X = random_space(rng, int(rng.integers(2, 7)), components=int(rng.integers(1, 3)))
        Y = random_space(rng, int(rng.integers(2, 7)), components=int(rng.integers(1, 3)))
        f, g = random_map(rng, X, Y), random_map(rng, X, Y)
        laws["closeness-reflexive"].record(closeness(f, f).scales == (0, 0))
        laws["closeness-symmetric"].record(closeness(f, g).present == closeness(g, f).present)
        p = random_controlled_partition(rng, X)
        _, q = partition_quotient_equivalence(X, p)
        laws["quotient-equivalence"].record(is_coarse_equivalence(q).ok)
    return laws


def suite_components(ctx: SuiteContext) -> dict[str, Law]:
    laws = _laws("cross-blocks-zero", "strong-sum", "cross-entry-unbounded")
    rng = ctx.rng
    for _ in range(ctx.count):
        X = random_space(rng, int(rng.integers(3, 8)), components=int(rng.integers(2, 4)))
        m = random_module(rng, X, max_dim=2, min_dim=1)
        t = random_finite_propagation(rng, m, scale=X.k)
        cd = component_decompose(t)
        laws["cross-blocks-zero"].record(cd.cross_blocks_zero)
        laws["strong-sum"].record(cd.reconstructs)
        comps = X.components().blocks
        mat = t.matrix.copy()
        r = m.coords(comps[0])[0]
        c = m.coords(comps[1])[0]
        mat[r, c] = 1.0
        bad = t.with_matrix(mat, 0.0)
        laws["cross-entry-unbounded"].record(propagation_scale(bad) == UNBOUNDED and not component_decompose(bad).reconstructs)
    return laws


SUITES: dict[str, Callable[[SuiteContext], dict[str, Law]]] = {
    "relations": suite_relations,
    "coarse-maps": suite_coarse_maps,
    "supports": suite_supports,
    "ql-arithmetic": suite_ql_arithmetic,
    "cartan": suite_cartan,
    "approx-unit": suite_approx_unit,
    "cover-closeness": suite_cover_closeness,
    "k-unitary": suite_k_unitary,
    "components": suite_components,
}


def run_suite(name: str, ctx: SuiteContext) -> list[dict]:
    if name not in SUITES:
        raise UnknownSuite(f"unknown suite {name!r}; available: {', '.join(sorted(SUITES))}")
    return [law.as_dict() for law in SUITES[name](ctx).values()]
