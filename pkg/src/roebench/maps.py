"""Controlled relations between finite coarse spaces.

Coarse maps are handled as relations ``R ⊆ Y x X``.  Every "there is an
entourage" statement returns the least ladder index that works, so results
are deterministic certificates rather than yes/no answers.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainNotCovered, GroundSetMismatch, NotControlled, PartitionNotControlled
from .relations import (
    FiniteRelation,
    GroundSet,
    bits,
    compose,
    compose_all,
    contains,
    members,
    transpose,
)
from .spaces import UNBOUNDED, CoarseSpace, Partition, Scale


@dataclass(frozen=True)
class ControlledMap:
    relation: FiniteRelation
    source: CoarseSpace
    target: CoarseSpace
    # modulus[i] = least j with R ∘ E_i ∘ Rᵀ ⊆ F_j
    modulus: tuple[Scale, ...]
    # least i with E_i(π_X(R)) = X
    everywhere_defined_scale: Scale

    @property
    def everywhere_defined(self) -> bool:
        return self.everywhere_defined_scale != UNBOUNDED

    @property
    def surjectivity_scale(self) -> Scale:
        """Least ``j`` with ``F_j(π_Y(R)) = Y``."""
        return self.target.density_scale(self.relation.range_mask())

    @property
    def coarsely_surjective(self) -> bool:
        return self.surjectivity_scale != UNBOUNDED


@dataclass(frozen=True)
class ClosenessCertificate:
    """``scales = (i, j)`` with ``R' ⊆ F_j ∘ R ∘ E_i`` and ``R ⊆ F_j ∘ R' ∘ E_i``."""

    scales: tuple[int, int] | None
    # whether g ∘ fᵀ is controlled (the composition test for everywhere-defined maps)
    composition_test: bool

    @property
    def present(self) -> bool:
        return self.scales is not None

    def __bool__(self):
        return self.present


@dataclass(frozen=True)
class CompositionReceipt:
    relation: FiniteRelation
    # ladder index j used to thicken the left factor to R ∘ F_j
    scale: int


@dataclass(frozen=True)
class Verdict:
    """A boolean answer with an optional witness explaining a negative."""

    ok: bool
    witness: object = None

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class EquivalenceReport:
    ok: bool
    inverse: ControlledMap | None
    # certificates for f ∘ fᵀ ≍ Δ_Y and fᵀ ∘ f ≍ Δ_X
    target_certificate: ClosenessCertificate | None
    source_certificate: ClosenessCertificate | None
    reason: str = ""

    def __bool__(self):
        return self.ok


def _check_shapes(space_x: CoarseSpace, space_y: CoarseSpace, r: FiniteRelation) -> None:
    if r.source != space_x.ground or r.target != space_y.ground:
        raise GroundSetMismatch("relation does not go from the source space to the target space")


def controlled_witness(space_x: CoarseSpace, space_y: CoarseSpace, r: FiniteRelation):
    """A pair ``((y, x), (y2, x2))`` of ``R`` with ``x ~ x2`` but ``y ≁ y2``, or ``None``."""
    emx, emy = space_x.e_max, space_y.e_max
    pairs = r.pairs()
    for y, x in pairs:
        for y2 in bits(r.image_mask(emx.rows[x])):
            if not (emy.rows[y] >> y2) & 1:
                x2 = next(bits(r.rows[y2] & emx.rows[x]))
                return (y, x), (y2, x2)
    return None


def check_controlled(space_x: CoarseSpace, space_y: CoarseSpace, r: FiniteRelation) -> ControlledMap:
    _check_shapes(space_x, space_y, r)
    witness = controlled_witness(space_x, space_y, r)
    if witness is not None:
        (y, x), (y2, x2) = witness
        raise NotControlled(
            f"not controlled: witness pair {(y, x)}, {(y2, x2)} has {x}~{x2} in the source "
            f"but {y}, {y2} in different target components",
            witness,
        )
    rt = transpose(r)
    modulus = tuple(space_y.scale_of(compose_all(r, e, rt)) for e in space_x.ladder)
    return ControlledMap(r, space_x, space_y, modulus, space_x.density_scale(r.domain_mask()))


def identity_map(space: CoarseSpace) -> ControlledMap:
    return check_controlled(space, space, space.diagonal())


def graph_relation(space_x: CoarseSpace, space_y: CoarseSpace, f) -> FiniteRelation:
    """Relation ``{(f(x), x)}`` of a (partial) function given as a dict or sequence."""
    items = f.items() if isinstance(f, dict) else enumerate(f)
    return FiniteRelation.from_pairs(space_x.ground, space_y.ground, [(y, x) for x, y in items if y is not None])


def map_from_function(space_x: CoarseSpace, space_y: CoarseSpace, f) -> ControlledMap:
    return check_controlled(space_x, space_y, graph_relation(space_x, space_y, f))


def compose_maps(g: ControlledMap, f: ControlledMap) -> ControlledMap:
    """Literal relation composition ``g ∘ f``; controlled whenever both factors are."""
    return check_controlled(f.source, g.target, compose(g.relation, f.relation))


def closeness(f: ControlledMap, g: ControlledMap) -> ClosenessCertificate:
    """Minimal ``(i, j)`` certificate that ``f`` and ``g`` are close.

    Minimal means least ``i + j``, ties broken by least ``i``.
    """
    if f.source is not g.source and f.source.ground != g.source.ground:
        raise GroundSetMismatch("closeness needs maps with the same source")
    if f.target.ground != g.target.ground:
        raise GroundSetMismatch("closeness needs maps with the same target")
    X, Y = f.source, f.target
    r, s = f.relation, g.relation
    best = None
    for i in X.scales:
        rx, sx = compose(r, X.ladder[i]), compose(s, X.ladder[i])
        for j in Y.scales:
            if contains(compose(Y.ladder[j], rx), s) and contains(compose(Y.ladder[j], sx), r):
                cand = (i + j, i, j)
                if best is None or cand < best:
                    best = cand
                break
    composition_test = contains(Y.e_max, compose(s, transpose(r)))
    return ClosenessCertificate(None if best is None else (best[1], best[2]), composition_test)


def relation_closeness(space_x: CoarseSpace, space_y: CoarseSpace, r: FiniteRelation, s: FiniteRelation) -> ClosenessCertificate:
    """Closeness of two relations that need not be controlled."""
    _check_shapes(space_x, space_y, r)
    _check_shapes(space_x, space_y, s)
    f = ControlledMap(r, space_x, space_y, (), space_x.density_scale(r.domain_mask()))
    g = ControlledMap(s, space_x, space_y, (), space_x.density_scale(s.domain_mask()))
    return closeness(f, g)


def coarse_compose(f: ControlledMap, s: FiniteRelation) -> CompositionReceipt:
    """Coarse composition ``[R ∘ S]`` of ``f = [R]`` after ``S ⊆ Y x X``.

    The representative ``R`` is replaced by the least ladder thickening
    ``R ∘ F_j`` whose domain literally contains ``π_Y(S)``.
    """
    Y = f.source
    if s.target != Y.ground:
        raise GroundSetMismatch("coarse_compose: s must land in the source of f")
    need = s.range_mask()
    dom = f.relation.domain_mask()
    for j, e in enumerate(Y.ladder):
        if not (need & ~e.image_mask(dom)):
            r = compose(f.relation, e)
            return CompositionReceipt(compose(r, s), j)
    missing = sorted(members(need & ~Y.e_max.image_mask(dom)))
    raise DomainNotCovered(f"coarse composition undefined: points {missing} are not coarsely in the domain")


def is_proper(f: ControlledMap) -> Verdict:
    """Preimages of bounded sets are bounded.

    Enough to test each target component: its preimage must sit inside one
    source component.  The witness is ``(component, [x components met])``.
    """
    rt = transpose(f.relation)
    xcomps = f.source.components()
    for comp in f.target.components():
        pre = rt.image_mask(sum(1 << y for y in comp))
        met = sorted({xcomps.block_of(x) for x in bits(pre)})
        if len(met) > 1:
            return Verdict(False, (sorted(comp), met))
    return Verdict(True)


def embedding_modulus(f: ControlledMap) -> tuple[Scale, ...] | None:
    """``ω(j)`` = least ``i`` with ``Rᵀ ∘ F_j ∘ R ⊆ E_i``; ``None`` if not an embedding."""
    r, rt = f.relation, transpose(f.relation)
    omega = tuple(f.source.scale_of(compose_all(rt, e, r)) for e in f.target.ladder)
    if omega[-1] == UNBOUNDED:
        return None
    return omega


def function_representative(f: ControlledMap) -> dict[int, int]:
    """A partial function close to ``f``: least ``y`` in each section ``R^T(x)``."""
    rt = transpose(f.relation)
    return {x: next(bits(row)) for x, row in enumerate(rt.rows) if row}


def is_coarse_equivalence(f: ControlledMap) -> EquivalenceReport:
    X, Y = f.source, f.target
    if not f.everywhere_defined:
        return EquivalenceReport(False, None, None, None, "not coarsely everywhere defined")
    rt = transpose(f.relation)
    try:
        inv = check_controlled(Y, X, rt)
    except NotControlled as exc:
        return EquivalenceReport(False, None, None, None, str(exc))
    if not inv.everywhere_defined:
        return EquivalenceReport(False, inv, None, None, "transpose is not coarsely everywhere defined")
    fy = compose_maps(f, inv)
    fx = compose_maps(inv, f)
    cy = closeness(fy, identity_map(Y))
    cx = closeness(fx, identity_map(X))
    ok = cy.present and cx.present
    return EquivalenceReport(ok, inv, cy, cx, "" if ok else "composites are not close to the identity")


def partition_quotient_equivalence(space: CoarseSpace, p: Partition) -> tuple[CoarseSpace, ControlledMap]:
    """Coarse equivalence from ``space`` onto the index set of a controlled partition."""
    if p.n != space.n:
        raise GroundSetMismatch("partition and space have different sizes")
    if space.partition_control_scale(p) == UNBOUNDED:
        raise PartitionNotControlled("partition not controlled: some block is unbounded")
    m = len(p)
    ground = GroundSet(m)
    masks = p.masks
    ladder = []
    for i in space.scales:
        rows = []
        e = space.ladder[i]
        for a in range(m):
            reach = e.image_mask(masks[a])
            rows.append(sum(1 << b for b in range(m) if masks[b] & reach))
        ladder.append(FiniteRelation(ground, ground, rows))
    quotient = CoarseSpace(ground, ladder, name=None if space.name is None else f"{space.name}/partition")
    rel = FiniteRelation(space.ground, ground, list(masks))
    qmap = check_controlled(space, quotient, rel)
    return quotient, qmap
