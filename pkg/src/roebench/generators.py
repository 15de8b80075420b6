"""Seeded random instances for property checks and verification suites."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .geomodule import GeoModule
from .maps import ControlledMap, check_controlled, graph_relation
from .operators import BlockOperator, random_operator, truncate
from .relations import FiniteRelation, GroundSet
from .spaces import CoarseSpace, Partition

__all__ = [
    "random_relation",
    "random_space",
    "random_module",
    "random_map",
    "random_controlled_partition",
    "random_operator",
    "random_finite_propagation",
    "UNIT_ALPHABET",
]

UNIT_ALPHABET = (1, -1, 1j, -1j, 0, 0)


def random_relation(rng: np.random.Generator, source: GroundSet, target: GroundSet, density: float | None = None) -> FiniteRelation:
    density = rng.random() if density is None else density
    bits = rng.random((target.size, source.size)) < density
    rows = [sum(1 << int(x) for x in np.flatnonzero(r)) for r in bits]
    return FiniteRelation(source, target, rows)


def random_space(rng: np.random.Generator, n: int, components: int = 1, levels: int = 3, name: str | None = None) -> CoarseSpace:
    """Points at integer positions on lines; distinct lines are infinitely far apart."""
    comp = np.sort(rng.integers(components, size=n))
    comp[:components] = np.arange(min(components, n))
    comp = np.sort(comp)
    pos = rng.integers(0, 2 * n + 1, size=n)
    d = np.abs(pos[:, None] - pos[None, :]).astype(float)
    d[comp[:, None] != comp[None, :]] = math.inf
    # coincident positions are nudged apart so the metric stays honest
    d[(d == 0) & ~np.eye(n, dtype=bool)] = 0.5
    finite = np.unique(d[np.isfinite(d)])
    picks = rng.choice(finite[1:], size=min(levels - 1, finite.size - 1), replace=False) if finite.size > 1 else []
    thresholds = sorted({0.0, *map(float, picks)})
    return CoarseSpace.from_metric(d, thresholds, name=name)


def random_module(rng: np.random.Generator, space: CoarseSpace, max_dim: int = 3, max_atom: int = 2,
                  faithful: bool = True, min_dim: int = 0) -> GeoModule:
    """Atoms are small chunks of one component; dims in ``[min_dim, max_dim]``."""
    blocks = []
    for comp in space.components().blocks:
        pts = [int(x) for x in rng.permutation(sorted(comp))]
        while pts:
            k = int(rng.integers(1, max_atom + 1))
            blocks.append(frozenset(pts[:k]))
            pts = pts[k:]
    atoms = Partition(space.n, tuple(sorted(blocks, key=min)))
    dims = [int(rng.integers(min_dim, max_dim + 1)) for _ in atoms.blocks]
    if faithful:
        comps = space.components()
        for c in range(len(comps)):
            mine = [a for a, b in enumerate(atoms.blocks) if comps.block_of(min(b)) == c]
            if all(dims[a] == 0 for a in mine):
                dims[mine[int(rng.integers(len(mine)))]] = max(1, min_dim)
    return GeoModule(space, atoms, dims)


def random_map(rng: np.random.Generator, X: CoarseSpace, Y: CoarseSpace, partial: bool = False,
               surjective_components: bool = False) -> ControlledMap:
    """A controlled function sending each source component into one target component."""
    xc, yc = X.components(), Y.components()
    targets = rng.integers(len(yc), size=len(xc))
    if surjective_components and len(xc) >= len(yc):
        targets[: len(yc)] = rng.permutation(len(yc))
    f = {}
    for c, block in enumerate(xc.blocks):
        pts = sorted(block)
        keep = pts
        if partial:
            keep = [x for x in pts if rng.random() < 0.6] or [pts[0]]
        tgt = sorted(yc.blocks[int(targets[c])])
        for x in keep:
            f[x] = int(tgt[int(rng.integers(len(tgt)))])
    return check_controlled(X, Y, graph_relation(X, Y, f))


def random_controlled_partition(rng: np.random.Generator, space: CoarseSpace) -> Partition:
    """Random partition refining the components."""
    blocks = []
    for comp in space.components().blocks:
        pts = [int(x) for x in rng.permutation(sorted(comp))]
        cuts = sorted(set(int(c) for c in rng.integers(1, len(pts) + 1, size=int(rng.integers(0, len(pts))))))
        start = 0
        for c in cuts + [len(pts)]:
            if c > start:
                blocks.append(frozenset(pts[start:c]))
                start = c
    return Partition(space.n, tuple(sorted(blocks, key=min)))


def random_finite_propagation(rng: np.random.Generator, m: GeoModule, scale: int | None = None,
                              density: float = 0.6, alphabet: Sequence[complex] | None = None) -> BlockOperator:
    """Random operator truncated to propagation at most ``scale`` (random level if omitted)."""
    t = random_operator(rng, m, m, density, alphabet)
    i = int(rng.integers(0, m.space.k + 1)) if scale is None else scale
    return truncate(t, i)
