"""Dowling-type triangle matroids of presentations and their weak representations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from forge.arrangement import Arrangement, is_c_homogeneous
from forge.errors import NormalFormFailure, PreconditionViolation, UnknownElement
from forge.exactla import Matrix, PrimeField, Subspace, block_rank_triple
from forge.exactla import kernels
from forge.groups import FiniteGroup, Homomorphism, Letter, NormalizedPresentation, regular_representation, validate_hom, word_str
from forge.matroids import GroundElement, TriangleMatroid, bits, validate_triangle

# sides are 1, 2, 3; side i is spanned by b^(i) and b^(i+1), cyclically
SIDE_BLOCKS = {1: (0, 1), 2: (1, 2), 3: (2, 0)}


def _third(i: int, j: int) -> int:
    return ({1, 2, 3} - {i, j}).pop()


def element_id(m: TriangleMatroid, name: str, inverted: bool, side: int) -> int:
    label = GroundElement(0, "generator", side, name, inverted).label
    return m.id_of(label)


def letter_id(m: TriangleMatroid, letter: Letter, side: int) -> int:
    name, sign = letter
    return element_id(m, name, sign == -1, side)


def build_dowling(p: NormalizedPresentation) -> TriangleMatroid:
    elems: list[GroundElement] = []
    for side in (1, 2, 3):
        elems.append(GroundElement(len(elems), "basis", side))
    for side in (1, 2, 3):
        elems.append(GroundElement(len(elems), "identity", side))
    gen_ids: dict[tuple[str, bool, int], int] = {}
    for x in p.generators:
        for inv in (False, True):
            for side in (1, 2, 3):
                gen_ids[(x, inv, side)] = len(elems)
                elems.append(GroundElement(len(elems), "generator", side, x, inv))
    b = {1: 0, 2: 1, 3: 2}
    e = {1: 3, 2: 4, 3: 5}

    flats: list[frozenset] = []
    for side in (1, 2, 3):
        j, k = SIDE_BLOCKS[side]
        members = {e[side], b[j + 1], b[k + 1]}
        for x in p.generators:
            members |= {gen_ids[(x, False, side)], gen_ids[(x, True, side)]}
        flats.append(frozenset(members))
    for x in p.generators:
        for i in (1, 2, 3):
            for j in (1, 2, 3):
                if i != j:
                    flats.append(frozenset({gen_ids[(x, False, i)], gen_ids[(x, True, j)], e[_third(i, j)]}))
    flats.append(frozenset(e.values()))
    for r in p.relators:
        (x, sx), (y, sy), (z, sz) = r
        flat = frozenset({gen_ids[(x, sx == -1, 2)], gen_ids[(y, sy == -1, 1)], gen_ids[(z, sz == -1, 3)]})
        if flat not in flats:
            flats.append(flat)
    m = TriangleMatroid(tuple(elems), (0, 1, 2), tuple(flats))
    validate_triangle(m)
    return m


def _block_column(field: PrimeField, c: int, side: int, mat: np.ndarray) -> Subspace:
    """Column span of the 3c x c block column for an element on ``side``."""
    col = np.zeros((3 * c, c), dtype=np.int64)
    neg_i = (-np.eye(c, dtype=np.int64)) % field.p
    if side == 1:
        col[0:c], col[c:2 * c] = neg_i, mat
    elif side == 2:
        col[c:2 * c], col[2 * c:] = neg_i, mat
    else:
        col[0:c], col[2 * c:] = mat, neg_i
    return Subspace.span_columns(Matrix(field, col))


def coordinate_block(field: PrimeField, c: int, i: int, blocks: int = 3) -> Subspace:
    rows = np.zeros((c, blocks * c), dtype=np.int64)
    rows[:, i * c:(i + 1) * c] = np.eye(c, dtype=np.int64)
    return Subspace(field, blocks * c, rows, canonical=True)


def build_weak_rep(m: TriangleMatroid, g: FiniteGroup, h: Homomorphism, field: PrimeField) -> Arrangement:
    """Block-column arrangement from the regular representation of ``g``."""
    validate_hom(h)
    gens = set(h.source.generators)
    for el in m.elements:
        if el.kind == "generator" and el.name not in gens:
            raise PreconditionViolation(f"matroid element {el.label} is not a generator of the presentation")
    rho = regular_representation(g)
    c = g.n
    ident = np.eye(c, dtype=np.int64)
    subs = []
    for el in m.elements:
        if el.kind == "basis":
            subs.append(coordinate_block(field, c, el.side - 1))
            continue
        if el.kind == "identity":
            mat = ident
        else:
            v = h.image(el.name)
            if el.inverted:
                v = int(g.inverses[v])
            mat = rho[v].matrix(field).a
        subs.append(_block_column(field, c, el.side, mat))
    return Arrangement(field, 3 * c, c, tuple(subs))


def weak_rep_violation(a: Arrangement, m: TriangleMatroid, basis: tuple[int, int, int] | None = None) -> tuple[int, str] | None:
    """A subset witnessing that ``a`` is not a weak c-representation, or None."""
    basis = m.basis if basis is None else tuple(basis)
    if tuple(basis) != m.basis:
        raise PreconditionViolation("basis differs from the matroid's distinguished basis")
    if a.n != m.n:
        raise PreconditionViolation(f"arrangement has {a.n} members, matroid {m.n} elements")
    for i, s in enumerate(a.subspaces):
        if s.dim != a.c:
            return 1 << i, f"dim A_{m.labels[i]} = {s.dim} != c = {a.c}"
    dims = a.rank_table()
    r = m.rank_table
    bound = a.c * r
    # only sets with at most one non-basis element must be tight
    low = np.array([sum(1 << m.basis[i] for i in range(3) if k >> i & 1) for k in range(8)], dtype=np.int64)
    singles = np.array([0] + [1 << i for i in bits(m.nonbasis_mask)], dtype=np.int64)
    idx = (low[None, :] | singles[:, None]).reshape(-1)
    bad = np.sort(idx[dims[idx] != bound[idx]])
    if bad.size:
        x = int(bad[0])
        return x, f"dim {int(dims[x])} != c*r = {int(bound[x])} on a set with at most one non-basis element"
    over = np.flatnonzero(dims > bound)
    if over.size:
        x = int(over[0])
        return x, f"dim {int(dims[x])} exceeds c*r = {int(bound[x])}"
    return None


def is_weak_rep(a: Arrangement, m: TriangleMatroid, basis: tuple[int, int, int] | None = None) -> bool:
    if not is_c_homogeneous(a):
        raise PreconditionViolation("arrangement is not c-homogeneous")
    return weak_rep_violation(a, m, basis) is None


@dataclass(frozen=True)
class WitnessRank:
    numerator: int
    c: int

    @property
    def is_witness(self) -> bool:
        return self.numerator > self.c

    def __str__(self) -> str:
        return f"{self.numerator}/{self.c}"

    def to_json(self) -> dict:
        return {"numerator": self.numerator, "c": self.c}


def witness_rank(a: Arrangement, m: TriangleMatroid, w: str) -> WitnessRank:
    try:
        x = element_id(m, w, False, 1)
    except UnknownElement:
        raise PreconditionViolation(f"{w} is not a generator of the encoded presentation") from None
    return WitnessRank(a.dim_of((1 << x) | (1 << 3)), a.c)


def _coordinates(q: np.ndarray, v: np.ndarray, p: int) -> np.ndarray:
    """Solve q @ y = v for y (q has independent columns)."""
    k = q.shape[1]
    r, piv = kernels.rref(np.hstack([q, v]), p)
    if r.shape[0] < k or not np.array_equal(piv[:k], np.arange(k)) or (piv >= k).any():
        raise NormalFormFailure("element subspace is not inside the span of the basis subspaces")
    return r[:k, k:]


def extract_group(a: Arrangement, m: TriangleMatroid) -> tuple[dict[str, Matrix], dict]:
    """Normal form of a weak representation: one c x c matrix per generator.

    Coordinates are taken with respect to bases of A_b1, A_b2, A_b3; each
    element's block column is normalized to the (-I; T; 0) shape of its side
    and the blocks are rescaled so the identity elements become I.
    """
    c, p, f = a.c, a.p, a.field
    q = np.hstack([a[i].rows.T for i in m.basis])
    if kernels.rank(q.T, p) != 3 * c:
        raise NormalFormFailure("basis subspaces are not independent of full dimension 3c")

    def normalized(i: int) -> np.ndarray:
        el = m.elements[i]
        y = _coordinates(q, a[i].rows.T, p)
        j, k = SIDE_BLOCKS[el.side]
        first, second = y[j * c:(j + 1) * c], y[k * c:(k + 1) * c]
        third = y[_third_block(j, k) * c:(_third_block(j, k) + 1) * c]
        if third.any():
            raise NormalFormFailure(f"{el.label} leaves the side spanned by its basis pair")
        try:
            inv = Matrix(f, first).inverse()
        except ZeroDivisionError:
            raise NormalFormFailure(f"{el.label} meets a basis subspace non-trivially") from None
        return (-(Matrix(f, second) @ inv).a) % p

    raw = {i: normalized(i) for i, el in enumerate(m.elements) if el.kind != "basis"}
    e1, e2, e3 = (Matrix(f, raw[3 + s]) for s in range(3))
    try:
        p1 = Matrix.identity(f, c)
        p2 = e1.inverse()
        p3 = p2 @ e2.inverse()
    except ZeroDivisionError:
        raise NormalFormFailure("identity element blocks are singular") from None
    conj = {1: (p2, p1), 2: (p3, p2), 3: (p1, p3)}

    def conjugate(i: int) -> Matrix:
        left, right = conj[m.elements[i].side]
        return left @ Matrix(f, raw[i]) @ right.inverse()

    audit: dict = {"c": c, "e3_identity": conjugate(5) == Matrix.identity(f, c)}
    if not audit["e3_identity"]:
        raise NormalFormFailure("third identity element does not normalize to I")

    t: dict[str, Matrix] = {}
    sides_ok = True
    inverses_ok = True
    for el in m.elements:
        if el.kind != "generator" or el.inverted or el.side != 1:
            continue
        tx = conjugate(el.id)
        try:
            tinv = tx.inverse()
        except ZeroDivisionError:
            raise NormalFormFailure(f"T_{el.name} is singular") from None
        for side in (1, 2, 3):
            sides_ok &= conjugate(element_id(m, el.name, False, side)) == tx
            inverses_ok &= conjugate(element_id(m, el.name, True, side)) == tinv
        t[el.name] = tx
    audit["sides_consistent"] = bool(sides_ok)
    audit["inverses_consistent"] = bool(inverses_ok)
    if not (sides_ok and inverses_ok):
        raise NormalFormFailure("generator matrices disagree across sides or with their inverses")

    def letter_matrix(letter: Letter) -> Matrix:
        name, s = letter
        return t[name] if s == 1 else t[name].inverse()

    rel_audit = []
    for fl in m.flats2:
        members = [m.elements[i] for i in fl]
        if len(fl) != 3 or any(x.kind != "generator" for x in members):
            continue
        if sorted(x.side for x in members) != [1, 2, 3]:
            continue
        by_side = {x.side: x for x in members}
        letters = tuple((by_side[s].name, -1 if by_side[s].inverted else 1) for s in (2, 1, 3))
        a_m, b_m, c_m_ = letter_matrix(letters[1]), letter_matrix(letters[0]), letter_matrix(letters[2])
        rk = block_rank_triple(a_m, b_m, c_m_)
        product_is_identity = b_m @ a_m @ c_m_ == Matrix.identity(f, c)
        rel_audit.append(
            {"relator": word_str(letters), "block_rank": rk, "expected": 2 * c, "product_is_identity": product_is_identity}
        )
    audit["relators"] = rel_audit
    return t, audit


def _third_block(j: int, k: int) -> int:
    return ({0, 1, 2} - {j, k}).pop()
