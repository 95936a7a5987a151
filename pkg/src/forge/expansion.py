"""c-bases, free expansions of polymatroids, and separation of two bottom elements."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from forge.arrangement import Arrangement
from forge.errors import (
    GroundMismatch,
    InputError,
    MultiplicityMismatch,
    NotAnExpansion,
    NotCAdmissible,
    NotWellSeparated,
    PreconditionViolation,
    TooLarge,
)
from forge.exactla import PrimeField, make_rng, random_generic_subspace, sample_until, subspace_intersect, sum_all
from forge.exactla import kernels
from forge.inflation import well_separated_violation
from forge.matroids import MAX_GROUND, Polymatroid, TriangleMatroid, bits, popcount

# c-admissibility is checked on every subset up to this many members, sampled beyond
ADMISSIBLE_EXHAUSTIVE = 16
ADMISSIBLE_SAMPLES = 256
# largest expansion whose full rank table is built eagerly
EAGER_TABLE = 16


@dataclass(frozen=True)
class ExpandedGround:
    """Pairs (element id, copy) with copies numbered from 1."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", tuple((int(e), int(i)) for e, i in self.pairs))

    @classmethod
    def from_multiplicities(cls, mult) -> ExpandedGround:
        return cls(tuple((e, i) for e, k in enumerate(mult) for i in range(1, int(k) + 1)))

    @property
    def size(self) -> int:
        return len(self.pairs)

    def multiplicities(self, n: int) -> list[int]:
        out = [0] * n
        for e, _ in self.pairs:
            if e >= n:
                raise MultiplicityMismatch(f"pair for element {e} on a ground set of size {n}")
            out[e] += 1
        return out

    def index(self, e: int, i: int) -> int:
        try:
            return self.pairs.index((e, i))
        except ValueError:
            raise InputError(f"no pair ({e}, {i})") from None

    def block(self, elems) -> int:
        """Mask of every copy of the given elements."""
        want = set(elems)
        return sum(1 << j for j, (e, _) in enumerate(self.pairs) if e in want)

    def block_masks(self, n: int) -> np.ndarray:
        """Entry S is the mask of all copies of the elements of S."""
        per = np.zeros(n, dtype=np.int64)
        for j, (e, _) in enumerate(self.pairs):
            per[e] |= 1 << j
        out = np.zeros(1 << n, dtype=np.int64)
        for e in range(n):
            out[1 << e : 2 << e] = out[: 1 << e] | per[e]
        return out

    def labels(self, names=None) -> list[str]:
        return [f"{names[e] if names else e}#{i}" for e, i in self.pairs]

    def to_json(self) -> dict:
        return {"pairs": [[e, i] for e, i in self.pairs]}

    @classmethod
    def from_json(cls, obj: dict) -> ExpandedGround:
        try:
            return cls(tuple((int(e), int(i)) for e, i in obj["pairs"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad expanded ground json: {exc}") from exc


@dataclass(eq=False)
class ExpansionMatroid:
    """A matroid on an expanded ground set, given by a rank oracle over pair masks.

    Small instances carry a full rank table; larger ones evaluate lazily and
    cache what was asked for.
    """

    ground: ExpandedGround
    oracle: Callable[[np.ndarray], np.ndarray] | None = None
    _table: np.ndarray | None = None
    _cache: dict = field(default_factory=dict)

    @classmethod
    def from_table(cls, ground: ExpandedGround, table) -> ExpansionMatroid:
        t = np.ascontiguousarray(table, dtype=np.int64)
        if t.shape != (1 << ground.size,):
            raise InputError(f"rank table of shape {t.shape} for {ground.size} pairs")
        return cls(ground, None, t)

    def ranks(self, masks) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64)
        if self._table is not None:
            return self._table[masks]
        todo = [int(x) for x in masks if int(x) not in self._cache]
        if todo:
            for x, r in zip(todo, self.oracle(np.array(todo, dtype=np.int64))):
                self._cache[x] = int(r)
        return np.array([self._cache[int(x)] for x in masks], dtype=np.int64)

    def rank(self, mask: int) -> int:
        return int(self.ranks([mask])[0])

    @property
    def table(self) -> np.ndarray:
        if self._table is None:
            if self.ground.size > MAX_GROUND:
                raise TooLarge(f"{self.ground.size} pairs exceed the table cap of {MAX_GROUND}")
            self._table = self.ranks(np.arange(1 << self.ground.size, dtype=np.int64))
            self._cache.clear()
        return self._table

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ExpansionMatroid) and self.ground == other.ground and bool(np.array_equal(self.table, other.table))

    def __hash__(self) -> int:
        return hash((self.ground, self.table.tobytes()))

    def to_json(self, names=None) -> dict:
        return {**self.ground.to_json(), "labels": self.ground.labels(names), "table": [int(v) for v in self.table]}

    @classmethod
    def from_json(cls, obj: dict) -> ExpansionMatroid:
        try:
            return cls.from_table(ExpandedGround.from_json(obj), obj["table"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"bad expansion matroid json: {exc}") from exc


# ---- c-bases -----------------------------------------------------------------


def _admissible_masks(n: int, seed) -> np.ndarray:
    if n <= ADMISSIBLE_EXHAUSTIVE:
        return np.arange(1 << n, dtype=np.int64)
    rng = make_rng(seed)
    masks = rng.integers(0, 1 << n, size=ADMISSIBLE_SAMPLES, dtype=np.int64)
    singles = 1 << np.arange(n, dtype=np.int64)
    return np.unique(np.concatenate([masks, singles, [(1 << n) - 1]]))


def c_admissible_violation(u: Arrangement, seed=(0,)) -> int | None:
    """A subset whose sum has dimension not divisible by c (sampled past 16 members)."""
    masks = _admissible_masks(u.n, list(seed) + [1 << 21])
    dims = u.dims_of(masks)
    bad = np.flatnonzero(dims % u.c)
    return int(masks[bad[0]]) if bad.size else None


@dataclass(frozen=True, eq=False)
class CBasis:
    """c-dimensional pieces indexed by an expanded ground set, with the arrangement they split."""

    ground: ExpandedGround
    pieces: Arrangement
    parent: Arrangement

    @property
    def c(self) -> int:
        return self.pieces.c

    def reconstruct(self) -> Arrangement:
        """Sum the copies of each element back into one subspace."""
        subs = []
        for e in range(self.parent.n):
            own = [self.pieces[j] for j, (f, _) in enumerate(self.ground.pairs) if f == e]
            subs.append(sum_all(self.pieces.field, self.pieces.ambient, own))
        return Arrangement(self.parent.field, self.parent.ambient, self.parent.c, tuple(subs))

    def violation(self, seed=(0,)) -> str | None:
        """Why this is not a c-basis of its parent, or None."""
        if any(s.dim != self.c for s in self.pieces.subspaces):
            return "a piece does not have dimension c"
        if self.ground.multiplicities(self.parent.n) != [s.dim // self.c for s in self.parent.subspaces]:
            return "copy counts differ from dim U_e / c"
        back = self.reconstruct()
        for e in range(self.parent.n):
            if back[e] != self.parent[e]:
                return f"pieces of element {e} do not span U_{e}"
        bad = c_admissible_violation(self.pieces, seed)
        if bad is not None:
            return f"piece subset {bits(bad)} has dimension not divisible by c"
        return None

    def combinatorial_type(self) -> ExpansionMatroid:
        c = self.c
        pieces = self.pieces

        def oracle(masks):
            dims = pieces.dims_of(masks)
            if (dims % c).any():
                raise NotCAdmissible("piece sums are not multiples of c")
            return dims // c

        if self.ground.size <= EAGER_TABLE:
            t = pieces.rank_table()
            if (t % c).any():
                raise NotCAdmissible("piece sums are not multiples of c")
            return ExpansionMatroid.from_table(self.ground, t // c)
        return ExpansionMatroid(self.ground, oracle)

    def to_json(self) -> dict:
        return {**self.ground.to_json(), "pieces": self.pieces.to_json()}

    @classmethod
    def from_json(cls, obj: dict, parent: Arrangement) -> CBasis:
        try:
            return cls(ExpandedGround.from_json(obj), Arrangement.from_json(obj["pieces"]), parent)
        except KeyError as exc:
            raise InputError(f"bad c-basis json: {exc}") from exc


def _multiplicities(u: Arrangement, c: int) -> list[int]:
    out = []
    for e, s in enumerate(u.subspaces):
        if s.dim % c:
            raise NotCAdmissible(f"dim U_{e} = {s.dim} is not a multiple of c = {c}")
        out.append(s.dim // c)
    return out


def _split(u: Arrangement, c: int, mult, seed, first: dict | None = None) -> CBasis:
    """Generic c-dimensional pieces of each U_e; ``first`` pins copy 1 of chosen elements."""
    first = first or {}
    ground = ExpandedGround.from_multiplicities(mult)
    subs = []
    for e, k in enumerate(mult):
        own = []
        for i in range(1, k + 1):
            if i == 1 and e in first:
                own.append(first[e])
            else:
                own.append(random_generic_subspace(u[e], c, list(seed) + [e, i]))
        subs.extend(own)
    pieces = Arrangement(u.field, u.ambient, c, tuple(subs))
    return CBasis(ground, pieces, u)


def generic_c_basis(u: Arrangement, seed, c: int | None = None) -> CBasis:
    """Split every U_e into dim U_e / c generic c-dimensional pieces.

    ``c`` defaults to the arrangement's own; pass half of it to split a double.
    """
    c = c or u.c
    mult = _multiplicities(u, c)
    bad = c_admissible_violation(u.with_c(c), seed)
    if bad is not None:
        raise NotCAdmissible(f"dim U_X for X = {bits(bad)} is not a multiple of c = {c}")
    seed = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]
    cb, _ = sample_until(lambda sd: _split(u, c, mult, sd), lambda b: b.violation(seed) is None, seed, what="generic c-basis")
    return cb


# ---- free expansions -----------------------------------------------------------


def _check_mult(g: Polymatroid, ground: ExpandedGround) -> None:
    have = ground.multiplicities(g.n)
    want = [g(1 << e) for e in range(g.n)]
    if have != want:
        raise MultiplicityMismatch(f"copies per element {have}, polymatroid singletons {want}")


def _subset_sums(counts: list[int]) -> np.ndarray:
    out = np.zeros(1 << len(counts), dtype=np.int64)
    for e, k in enumerate(counts):
        out[1 << e : 2 << e] = out[: 1 << e] + k
    return out


def free_expansion_rank(g: Polymatroid, ground: ExpandedGround, x: int) -> int:
    """Rank of the pair mask ``x`` in the free expansion F(g).

    A set is independent iff every F has at most g(F) of its pairs over F;
    rank is found greedily along the pairs of ``x``.
    """
    _check_mult(g, ground)
    counts = [0] * g.n
    rank = 0
    for j in bits(x):
        e = ground.pairs[j][0]
        counts[e] += 1
        if (_subset_sums(counts) <= g.table).all():
            rank += 1
        else:
            counts[e] -= 1
    return rank


def free_expansion(g: Polymatroid) -> ExpansionMatroid:
    ground = ExpandedGround.from_multiplicities([g(1 << e) for e in range(g.n)])

    def oracle(masks):
        return np.array([free_expansion_rank(g, ground, int(x)) for x in masks], dtype=np.int64)

    return ExpansionMatroid(ground, oracle)


def expansion_violation(n: ExpansionMatroid, g: Polymatroid) -> int | None:
    """A set S of elements whose block of copies has rank other than g(S)."""
    _check_mult(g, n.ground)
    blocks = n.ground.block_masks(g.n)
    bad = np.flatnonzero(n.ranks(blocks) != g.table)
    return int(bad[0]) if bad.size else None


def is_expansion(n: ExpansionMatroid, g: Polymatroid) -> bool:
    return expansion_violation(n, g) is None


def weak_image_violation(n1: ExpansionMatroid, n2: ExpansionMatroid) -> int | None:
    """A set independent in ``n1`` but dependent in ``n2``."""
    if n1.ground != n2.ground:
        raise GroundMismatch("expansions live on different expanded ground sets")
    k = n1.ground.size
    sizes = np.array([popcount(i) for i in range(1 << k)], dtype=np.int64)
    indep = np.flatnonzero(n1.table == sizes)
    bad = indep[n2.table[indep] != sizes[indep]]
    return int(bad[0]) if bad.size else None


def is_weak_image(n1: ExpansionMatroid, n2: ExpansionMatroid) -> bool:
    return weak_image_violation(n1, n2) is None


# ---- separation ----------------------------------------------------------------


def separating_basis(w: Arrangement, m: TriangleMatroid, x: int, seed) -> CBasis:
    """c-basis of a doubled arrangement whose first copy of ``x`` lies in A_x = W_x cap (W_b1 + W_b2).

    Here c is half of w.c.  Requires w to be well separated with respect to x.
    """
    el = m.elements[x]
    if el.kind == "basis" or el.side != 1:
        raise PreconditionViolation(f"{m.labels[x]} is not a bottom element")
    if w.c % 2:
        raise PreconditionViolation(f"c = {w.c} is odd, so the arrangement is not a double")
    bad = well_separated_violation(w, m, x)
    if bad is not None:
        raise NotWellSeparated(f"A_{m.labels[x]} meets U_T too much for T = {bits(bad)}")
    c = w.c // 2
    mult = _multiplicities(w, c)
    bottom = (1 << m.basis[0]) | (1 << m.basis[1])
    a_x = subspace_intersect(w[x], w.span(bottom))
    if a_x.dim < c:
        raise NotWellSeparated(f"A_{m.labels[x]} has dimension {a_x.dim} < c = {c}")
    seed = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]

    def make(sd):
        return _split(w, c, mult, sd, first={x: random_generic_subspace(a_x, c, sd + [1 << 22])})

    cb, _ = sample_until(make, lambda b: b.violation(seed) is None, seed, what="separating c-basis")
    return cb


def separation_ranks(n: ExpansionMatroid, x: int, y: int, bottom=(0, 1)) -> tuple[int, int]:
    """r((x,1) with all copies of b^(1), b^(2)) and r((x,1) with all copies of y)."""
    gr = n.ground
    x1 = 1 << gr.index(x, 1)
    return n.rank(x1 | gr.block(bottom)), n.rank(x1 | gr.block([y]))


def separates(n: ExpansionMatroid, x: int, y: int, g: Polymatroid, bottom=(0, 1)) -> bool:
    """Both rank equations certifying A_x != A_y, for ``n`` an expansion of 2g.

    ``g`` is the undoubled polymatroid; ``bottom`` holds the ids of b^(1), b^(2).
    """
    g2 = Polymatroid(g.n, 2 * g.table, g.labels)
    try:
        bad = expansion_violation(n, g2)
    except MultiplicityMismatch as exc:
        raise NotAnExpansion(str(exc)) from exc
    if bad is not None:
        raise NotAnExpansion(f"block of {bits(bad)} has the wrong rank")
    with_bottom, with_y = separation_ranks(n, x, y, bottom)
    return with_bottom == 4 and with_y == g2(1 << y) + 1


# ---- brute force on micro instances ----------------------------------------------

BRUTE_MAX_PAIRS = 6
BRUTE_MAX_RANK = 3
BRUTE_MAX_P = 5


def _points(p: int, dim: int) -> list[tuple[int, ...]]:
    """Projective points: nonzero vectors whose first nonzero entry is 1."""
    out = []
    for v in itertools.product(range(p), repeat=dim):
        nz = [a for a in v if a]
        if nz and nz[0] == 1:
            out.append(v)
    return out


def bruteforce_expansions_1arr(g: Polymatroid, p: int) -> set[ExpansionMatroid]:
    """Every combinatorial type of a 1-arrangement over GF(p) whose vectors realize g block-wise."""
    mult = [g(1 << e) for e in range(g.n)]
    top = g(g.n and (1 << g.n) - 1)
    if sum(mult) > BRUTE_MAX_PAIRS or top > BRUTE_MAX_RANK:
        raise TooLarge(f"sum of g(e) = {sum(mult)}, g(E) = {top}; limits are {BRUTE_MAX_PAIRS} and {BRUTE_MAX_RANK}")
    if p > BRUTE_MAX_P:
        raise TooLarge(f"field size {p} exceeds {BRUTE_MAX_P}")
    PrimeField(p)
    ground = ExpandedGround.from_multiplicities(mult)
    k = ground.size
    if top == 0:
        return {ExpansionMatroid.from_table(ground, np.zeros(1 << k, dtype=np.int64))}
    pts = _points(p, top)
    owner = [e for e, _ in ground.pairs]
    blocks = ground.block_masks(g.n)
    # subsets of elements that are complete once pair j has been placed
    done_at = {}
    for s in range(1, 1 << g.n):
        placed = [j for j in range(k) if s >> owner[j] & 1]
        if placed:
            done_at.setdefault(placed[-1], []).append(s)
        elif g(s):
            return set()
    found = set()

    def rank_of(vecs, mask):
        rows = [vecs[j] for j in bits(mask)]
        return kernels.rank(np.array(rows, dtype=np.int64), p) if rows else 0

    def rec(vecs):
        j = len(vecs)
        if j == k:
            table = kernels.rank_table([np.array([v], dtype=np.int64) for v in vecs], p, top)
            found.add(ExpansionMatroid.from_table(ground, table))
            return
        for v in pts:
            vecs.append(v)
            if all(rank_of(vecs, int(blocks[s])) == g(s) for s in done_at.get(j, ())):
                rec(vecs)
            vecs.pop()

    rec([])
    return found
