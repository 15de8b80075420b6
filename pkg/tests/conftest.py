from __future__ import annotations

import numpy as np
import pytest

from roebench.relations import FiniteRelation
from roebench.spaces import CoarseSpace, clusters_space, line_space


@pytest.fixture
def line4() -> CoarseSpace:
    return line_space(4, name="Line4")


@pytest.fixture
def pair2x2() -> CoarseSpace:
    return clusters_space([2, 2], name="Pair2x2")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def rel(space_x, space_y, pairs) -> FiniteRelation:
    return FiniteRelation.from_pairs(space_x.ground, space_y.ground, pairs)


def band(space: CoarseSpace, r: int) -> set[tuple[int, int]]:
    return {(y, x) for y in range(space.n) for x in range(space.n) if abs(x - y) <= r}
