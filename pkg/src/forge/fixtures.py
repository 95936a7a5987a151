"""Small hand-built instances used by the CLI's toy scale and by the tests."""
from __future__ import annotations

import numpy as np

from forge.arrangement import Arrangement
from forge.dowling import build_dowling, build_weak_rep, coordinate_block, _block_column
from forge.exactla import PrimeField
from forge.groups import FiniteGroup, Homomorphism, NormalizedPresentation, Presentation, cyclic, lift_images, normalize
from forge.matroids import GroundElement, TriangleMatroid, restrict, validate_triangle

X_ID, Y_ID = 3, 4


def toy_matroid() -> TriangleMatroid:
    """B plus two bottom elements x, y on the line through b^(1), b^(2)."""
    elems = (
        GroundElement(0, "basis", 1),
        GroundElement(1, "basis", 2),
        GroundElement(2, "basis", 3),
        GroundElement(X_ID, "generator", 1, "x"),
        GroundElement(Y_ID, "generator", 1, "y"),
    )
    m = TriangleMatroid(elems, (0, 1, 2), (frozenset({0, 1, X_ID, Y_ID}),))
    validate_triangle(m)
    return m


_SWAP = np.array([[0, 1], [1, 0]], dtype=np.int64)
_ID = np.eye(2, dtype=np.int64)


def toy_from_blocks(field: PrimeField, x_block: np.ndarray, y_block: np.ndarray) -> Arrangement:
    """Toy arrangement with A_x, A_y the side-1 block columns of the given c x c blocks."""
    c = x_block.shape[0]
    subs = [coordinate_block(field, c, i) for i in range(3)]
    subs.append(_block_column(field, c, 1, np.asarray(x_block) % field.p))
    subs.append(_block_column(field, c, 1, np.asarray(y_block) % field.p))
    return Arrangement(field, 3 * c, c, tuple(subs))


def toy_arrangement(field: PrimeField | None = None, variant: str = "swap") -> Arrangement:
    """c = 2 weak representation of the toy matroid with A_x from I and A_y from

    the swap matrix ("swap"), from I again ("equal", so A_x = A_y), or from 2I
    ("disjoint", so A_x and A_y meet trivially).
    """
    field = field or PrimeField(1009)
    y_block = {"swap": _SWAP, "equal": _ID, "disjoint": 2 * _ID}[variant]
    return toy_from_blocks(field, _ID, y_block)


def cube_presentation() -> NormalizedPresentation:
    """<x | xxx> with word x."""
    x = ("x", 1)
    return normalize(Presentation(("x",), ((x, x, x),), (x,)))


def cube_weak_rep(field: PrimeField | None = None, image: int = 1) -> tuple[TriangleMatroid, Arrangement]:
    """N for <x | xxx> and its weak representation from Z/3 with x -> ``image``."""
    field = field or PrimeField(1009)
    p = cube_presentation()
    m = build_dowling(p)
    g = cyclic(3)
    h = Homomorphism(p, g, lift_images(p, g, {"x": image}))
    return m, build_weak_rep(m, g, h, field)


def toy_ids(m: TriangleMatroid, w: str) -> list[int]:
    """B together with w^(1) and e^(1), the toy-scale restriction of a Dowling matroid."""
    return list(m.basis) + [m.id_of(f"{w}^(1)"), m.id_of("e^(1)")]


def toy_restriction(m: TriangleMatroid, a: Arrangement, w: str) -> tuple[TriangleMatroid, Arrangement]:
    ids = toy_ids(m, w)
    return restrict(m, ids), a.restrict(ids)


def weak_rep_for(p: NormalizedPresentation, g: FiniteGroup, images: dict, field: PrimeField) -> tuple[TriangleMatroid, Arrangement]:
    m = build_dowling(p)
    h = Homomorphism(p, g, lift_images(p, g, images))
    return m, build_weak_rep(m, g, h, field)
