"""Rank-3 triangle matroids and integer polymatroids on small ground sets.

Subsets are bitmasks: bit i set means element id i is present.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable

import numpy as np

from forge.errors import (
    GroundSetMismatch,
    GroundSetTooLarge,
    InputError,
    NotAMatroid,
    NotAPolymatroid,
    PreconditionViolation,
    UnknownElement,
)

MAX_GROUND = 24

_LABEL = re.compile(r"^(?P<name>[A-Za-z_][A-Za-z0-9_]*)(?P<inv>\^-1)?\^\((?P<side>[123])\)$")


@dataclass(frozen=True)
class GroundElement:
    id: int
    kind: str  # "basis", "identity" or "generator"
    side: int
    name: str = ""
    inverted: bool = False

    @property
    def label(self) -> str:
        if self.kind == "basis":
            return f"b^({self.side})"
        if self.kind == "identity":
            return f"e^({self.side})"
        inv = "^-1" if self.inverted else ""
        return f"{self.name}{inv}^({self.side})"

    @classmethod
    def parse(cls, ident: int, label: str) -> GroundElement:
        m = _LABEL.match(label)
        if not m:
            raise InputError(f"unparseable element label {label!r}")
        name, side, inv = m["name"], int(m["side"]), bool(m["inv"])
        if name == "b" and not inv:
            return cls(ident, "basis", side)
        if name == "e" and not inv:
            return cls(ident, "identity", side)
        return cls(ident, "generator", side, name, inv)


def popcount(x: int) -> int:
    return bin(x).count("1")


def bits(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def mask_of(ids: Iterable[int]) -> int:
    m = 0
    for i in ids:
        m |= 1 << int(i)
    return m


def _popcounts(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    pc = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        pc += (idx >> i) & 1
    return pc


@dataclass(frozen=True, eq=False)
class TriangleMatroid:
    elements: tuple[GroundElement, ...]
    basis: tuple[int, int, int]
    flats2: tuple[frozenset, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "basis", tuple(int(b) for b in self.basis))
        object.__setattr__(self, "flats2", tuple(frozenset(int(x) for x in f) for f in self.flats2))

    @property
    def n(self) -> int:
        return len(self.elements)

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    @property
    def basis_mask(self) -> int:
        return mask_of(self.basis)

    @property
    def nonbasis_mask(self) -> int:
        return self.full_mask & ~self.basis_mask

    @cached_property
    def flat_masks(self) -> tuple[int, ...]:
        return tuple(mask_of(f) for f in self.flats2)

    @cached_property
    def labels(self) -> tuple[str, ...]:
        return tuple(e.label for e in self.elements)

    def id_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownElement(label) from None

    def to_mask(self, x) -> int:
        if isinstance(x, (int, np.integer)):
            mask = int(x)
        else:
            mask = 0
            for e in x:
                if isinstance(e, str):
                    e = self.id_of(e)
                if not 0 <= int(e) < self.n:
                    raise UnknownElement(str(e))
                mask |= 1 << int(e)
        if mask < 0 or mask >> self.n:
            raise UnknownElement(f"mask {mask:#x} outside ground set of size {self.n}")
        return mask

    @cached_property
    def rank_table(self) -> np.ndarray:
        if self.n > MAX_GROUND:
            raise GroundSetTooLarge(f"{self.n} elements exceed the cap of {MAX_GROUND}")
        idx = np.arange(1 << self.n, dtype=np.int64)
        pc = _popcounts(self.n)
        in_flat = np.zeros(1 << self.n, dtype=bool)
        for f in self.flat_masks:
            in_flat |= (idx & ~f) == 0
        r = np.where(pc >= 3, 3, pc)
        r = np.where((pc >= 3) & in_flat, 2, r)
        r.setflags(write=False)
        return r

    @cached_property
    def cm_table(self) -> np.ndarray:
        """C_M(S) as a basis bitmask for every S, or -1 where it does not exist."""
        r = self.rank_table
        idx = np.arange(1 << self.n, dtype=np.int64)
        out = np.full(1 << self.n, -1, dtype=np.int64)
        for d in _submasks(self.basis_mask):
            ok = (r == r[idx | d]) & (r == r[d]) & (out < 0)
            out[ok] = d
        out.setflags(write=False)
        return out

    def to_json(self) -> dict:
        return {
            "elements": list(self.labels),
            "basis": list(self.basis),
            "flats2": [sorted(f) for f in self.flats2],
        }

    @classmethod
    def from_json(cls, obj: dict) -> TriangleMatroid:
        try:
            elems = tuple(GroundElement.parse(i, lab) for i, lab in enumerate(obj["elements"]))
            m = cls(elems, tuple(obj["basis"]), tuple(frozenset(f) for f in obj["flats2"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad matroid json: {exc}") from exc
        validate_triangle(m)
        return m


def _submasks(mask: int) -> list[int]:
    out = []
    s = mask
    while True:
        out.append(s)
        if s == 0:
            break
        s = (s - 1) & mask
    return sorted(out)


def submasks(mask: int) -> list[int]:
    """All subsets of ``mask`` in increasing numeric order."""
    return _submasks(mask)


def validate_triangle(m: TriangleMatroid) -> None:
    if m.n > MAX_GROUND:
        raise GroundSetTooLarge(f"{m.n} elements exceed the cap of {MAX_GROUND}")
    if len(set(m.labels)) != m.n:
        raise NotAMatroid("duplicate element labels")
    if any(e.id != i for i, e in enumerate(m.elements)):
        raise NotAMatroid("element ids must be consecutive from 0")
    if len(set(m.basis)) != 3 or not all(0 <= b < m.n for b in m.basis):
        raise NotAMatroid(f"basis {m.basis} is not three distinct elements")
    for f in m.flats2:
        if not all(0 <= x < m.n for x in f):
            raise NotAMatroid(f"flat {sorted(f)} references unknown elements")
        if len(f) < 3:
            raise NotAMatroid(f"flat {sorted(f)} has fewer than three elements")
        if set(m.basis) <= f:
            raise NotAMatroid(f"flat {sorted(f)} contains the whole basis")
    flats = list(m.flats2)
    for i in range(len(flats)):
        for j in range(i + 1, len(flats)):
            common = flats[i] & flats[j]
            if len(common) >= 2:
                raise NotAMatroid(
                    f"flats {sorted(flats[i])} and {sorted(flats[j])} share {sorted(common)}"
                )
    basis = set(m.basis)
    for e in range(m.n):
        if e in basis:
            continue
        if not any(e in f and len(f & basis) == 2 for f in flats):
            raise NotAMatroid(f"element {m.labels[e]} lies on no line spanned by two basis elements")


def restrict(m: TriangleMatroid, ids) -> TriangleMatroid:
    """Restriction to ``ids`` (which must contain the basis), renumbered in the given order."""
    ids = [int(i) for i in ids]
    if not set(m.basis) <= set(ids):
        raise PreconditionViolation("a restriction must keep the basis")
    new = {old: k for k, old in enumerate(ids)}
    elems = tuple(replace(m.elements[old], id=k) for k, old in enumerate(ids))
    flats = []
    for f in m.flats2:
        g = frozenset(new[x] for x in f if x in new)
        if len(g) >= 3:
            flats.append(g)
    out = TriangleMatroid(elems, tuple(new[b] for b in m.basis), tuple(flats))
    validate_triangle(out)
    return out


def triangle_rank(m: TriangleMatroid, x) -> int:
    return int(m.rank_table[m.to_mask(x)])


def c_m(m: TriangleMatroid, s) -> int | None:
    """Basis subset with the same closure as ``s`` (bitmask), or None."""
    v = int(m.cm_table[m.to_mask(s)])
    return None if v < 0 else v


def cm_or_empty(m: TriangleMatroid, s: int) -> int:
    v = int(m.cm_table[s])
    return 0 if v < 0 else v


# ---------------------------------------------------------------------------
# polymatroids
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Polymatroid:
    n: int
    table: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.n > MAX_GROUND:
            raise GroundSetTooLarge(f"{self.n} elements exceed the cap of {MAX_GROUND}")
        t = np.ascontiguousarray(self.table, dtype=np.int64)
        if t.shape != (1 << self.n,):
            raise InputError(f"table of length {t.shape} for a ground set of size {self.n}")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(self.n)))
        else:
            object.__setattr__(self, "labels", tuple(self.labels))

    def __call__(self, mask: int) -> int:
        return int(self.table[mask])

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Polymatroid) and self.n == other.n and bool(np.array_equal(self.table, other.table))

    def __hash__(self) -> int:
        return hash((self.n, self.table.tobytes()))

    def to_json(self) -> dict:
        return {"n": self.n, "table": [int(v) for v in self.table], "labels": list(self.labels)}

    @classmethod
    def from_json(cls, obj: dict) -> Polymatroid:
        try:
            return cls(int(obj["n"]), np.array(obj["table"], dtype=np.int64), tuple(obj.get("labels", ())))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad polymatroid json: {exc}") from exc


def matroid_polymatroid(m: TriangleMatroid) -> Polymatroid:
    return Polymatroid(m.n, m.rank_table, m.labels)


def polymatroid_violation(g: Polymatroid) -> str | None:
    t = g.table
    n = g.n
    if t[0] != 0:
        return "g(empty) != 0"
    if (t < 0).any():
        return f"negative value at {int(np.flatnonzero(t < 0)[0]):#x}"
    idx = np.arange(1 << n, dtype=np.int64)
    for i in range(n):
        bi = 1 << i
        lo = idx[(idx & bi) == 0]
        bad = t[lo | bi] < t[lo]
        if bad.any():
            s = int(lo[bad][0])
            return f"monotonicity: g({s | bi:#x}) < g({s:#x})"
    for i in range(n):
        for j in range(i + 1, n):
            bi, bj = 1 << i, 1 << j
            lo = idx[(idx & (bi | bj)) == 0]
            bad = t[lo | bi] + t[lo | bj] < t[lo | bi | bj] + t[lo]
            if bad.any():
                s = int(lo[bad][0])
                return f"submodularity: S={s | bi:#x}, T={s | bj:#x}"
    return None


def validate_polymatroid(g: Polymatroid) -> None:
    v = polymatroid_violation(g)
    if v:
        raise NotAPolymatroid(v)


def _check_ground(g: Polymatroid, m: TriangleMatroid) -> None:
    if g.n != m.n:
        raise GroundSetMismatch(f"polymatroid on {g.n} elements, matroid on {m.n}")


def extension_violation(g: Polymatroid, m: TriangleMatroid) -> tuple[int, int] | None:
    """First (C, S) violating g(C)+g(S)-g(S∪C) = r(C)+r(S)-r(S∪C), or None."""
    _check_ground(g, m)
    t = g.table
    r = m.rank_table
    idx = np.arange(1 << m.n, dtype=np.int64)
    for c in _submasks(m.basis_mask):
        lhs = t[c] + t - t[idx | c]
        rhs = r[c] + r - r[idx | c]
        bad = lhs != rhs
        if bad.any():
            return c, int(idx[bad][0])
    return None


def is_extension_poly(g: Polymatroid, m: TriangleMatroid) -> bool:
    return extension_violation(g, m) is None


def comb_inflate(g: Polymatroid, m: TriangleMatroid, s: int, check: bool = True) -> Polymatroid:
    """Mirror of the two-step algebraic inflation on rank tables."""
    s = m.to_mask(s)
    if s == 0:
        raise PreconditionViolation("inflation subset is empty")
    if s & m.basis_mask:
        raise PreconditionViolation("inflation subset meets the basis")
    if check and not is_extension_poly(g, m):
        raise PreconditionViolation("input polymatroid does not extend the matroid")
    _check_ground(g, m)
    t = g.table
    idx = np.arange(1 << m.n, dtype=np.int64)
    z = idx & s
    zc = _popcounts(m.n)[z]
    cm = cm_or_empty(m, s)
    out = t + 2 * zc
    full = z == s
    out[full] = t[idx[full] | cm] + 2 * popcount(s) - 1
    return Polymatroid(m.n, out, g.labels)


@dataclass(frozen=True)
class SubsetOrder:
    order: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "order", tuple(int(x) for x in self.order))

    def __len__(self) -> int:
        return len(self.order)

    def violation(self) -> str | None:
        if not self.order or self.order[0] != 0:
            return "order must begin with the empty set"
        if len(set(self.order)) != len(self.order):
            return "order repeats a subset"
        pos = {s: i for i, s in enumerate(self.order)}
        for i, s in enumerate(self.order):
            for b in bits(s):
                prev = pos.get(s & ~(1 << b))
                if prev is None or prev > i:
                    return f"{s:#x} precedes its subset {s & ~(1 << b):#x}"
        return None


def build_subset_order(m: TriangleMatroid) -> SubsetOrder:
    subs = _submasks(m.nonbasis_mask)
    return SubsetOrder(tuple(sorted(subs, key=lambda s: (popcount(s), s))))


def full_comb_pipeline(
    m: TriangleMatroid, order: SubsetOrder, max_steps: int | None = None, check: bool = True
) -> list[Polymatroid]:
    v = order.violation()
    if v:
        raise PreconditionViolation(v)
    g = matroid_polymatroid(m)
    out = [g]
    steps = [s for s in order.order if s != 0]
    if max_steps is not None:
        steps = steps[:max_steps]
    for s in steps:
        g = comb_inflate(g, m, s, check=check)
        if check:
            validate_polymatroid(g)
        out.append(g)
    return out


def double_poly(g: Polymatroid) -> Polymatroid:
    return Polymatroid(g.n, 2 * g.table, g.labels)


def contraction_violation(g: Polymatroid, m: TriangleMatroid) -> tuple[int, int] | None:
    """First (D, S) violating g(D∪S∪C_M(S)) = g(S∪B) - g(B) + r(D∪S), or None."""
    _check_ground(g, m)
    t = g.table
    r = m.rank_table
    b = m.basis_mask
    idx = np.arange(1 << m.n, dtype=np.int64)
    cm = np.where(m.cm_table < 0, 0, m.cm_table)
    for d in _submasks(b):
        lhs = t[idx | d | cm]
        rhs = t[idx | b] - t[b] + r[idx | d]
        bad = lhs != rhs
        if bad.any():
            return d, int(idx[bad][0])
    return None


def contraction_identity_check(g: Polymatroid, m: TriangleMatroid) -> bool:
    if not is_extension_poly(g, m):
        raise PreconditionViolation("polymatroid does not extend the matroid")
    return contraction_violation(g, m) is None
