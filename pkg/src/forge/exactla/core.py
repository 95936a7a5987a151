"""Prime fields, matrices and canonical subspaces."""
from __future__ import annotations

import os
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Sequence

import numpy as np

from forge.errors import AmbientMismatch, DimensionTooLarge, GenericityFailure, InputError
from forge.exactla import kernels

DEFAULT_P = 1_000_003
MAX_RETRIES = 8


def default_prime() -> int:
    raw = os.environ.get("FORGE_FIELD_P")
    return int(raw) if raw else DEFAULT_P


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class PrimeField:
    p: int

    def __post_init__(self) -> None:
        if not isinstance(self.p, (int, np.integer)) or not is_prime(int(self.p)):
            raise InputError(f"{self.p} is not prime")
        if self.p >= kernels.MAX_MODULUS:
            raise InputError(f"modulus {self.p} must be below 2**31")

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise ZeroDivisionError("0 has no inverse")
        return pow(a, self.p - 2, self.p)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.int64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Matrix:
    """Dense matrix over a prime field.  ``a`` is a read-only int64 array."""

    field: PrimeField
    a: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.a, dtype=np.int64)
        if arr.ndim != 2:
            raise InputError("matrix data must be two-dimensional")
        object.__setattr__(self, "a", _frozen(arr % self.field.p))

    @property
    def p(self) -> int:
        return self.field.p

    @property
    def rows(self) -> int:
        return self.a.shape[0]

    @property
    def cols(self) -> int:
        return self.a.shape[1]

    @classmethod
    def identity(cls, field: PrimeField, k: int) -> Matrix:
        return cls(field, np.eye(k, dtype=np.int64))

    @classmethod
    def zeros(cls, field: PrimeField, rows: int, cols: int) -> Matrix:
        return cls(field, np.zeros((rows, cols), dtype=np.int64))

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Matrix)
            and self.p == other.p
            and self.a.shape == other.a.shape
            and bool(np.array_equal(self.a, other.a))
        )

    def __hash__(self) -> int:
        return hash((self.p, self.a.shape, self.a.tobytes()))

    def __add__(self, other: Matrix) -> Matrix:
        return Matrix(self.field, self.a + other.a)

    def __sub__(self, other: Matrix) -> Matrix:
        return Matrix(self.field, self.a - other.a)

    def __neg__(self) -> Matrix:
        return Matrix(self.field, -self.a)

    def __matmul__(self, other: Matrix) -> Matrix:
        return Matrix(self.field, kernels.matmul(self.a, other.a, self.p))

    def inverse(self) -> Matrix:
        k = self.rows
        if k != self.cols:
            raise ValueError("inverse of a non-square matrix")
        aug = np.hstack([self.a, np.eye(k, dtype=np.int64)])
        r, piv = kernels.rref(aug, self.p)
        if r.shape[0] < k or not np.array_equal(piv[:k], np.arange(k)):
            raise ZeroDivisionError("matrix is singular")
        return Matrix(self.field, r[:k, k:])

    def to_json(self) -> dict:
        return {"p": self.p, "rows": self.rows, "cols": self.cols, "entries": [int(x) for x in self.a.reshape(-1)]}

    @classmethod
    def from_json(cls, obj: dict) -> Matrix:
        try:
            p, rows, cols, entries = int(obj["p"]), int(obj["rows"]), int(obj["cols"]), obj["entries"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad matrix json: {exc}") from exc
        if len(entries) != rows * cols:
            raise InputError("matrix entries length differs from rows*cols")
        return cls(PrimeField(p), np.array(entries, dtype=np.int64).reshape(rows, cols))


def mat_rank(m: Matrix) -> int:
    return kernels.rank(m.a, m.p)


@dataclass(frozen=True, eq=False)
class Subspace:
    """Subspace of GF(p)^ambient.

    Stored as its reduced row echelon basis ``rows`` (dim x ambient), which is
    the transpose of the reduced column echelon basis matrix.  Two subspaces
    are equal iff these arrays are identical.
    """

    field: PrimeField
    ambient: int
    rows: np.ndarray = dc_field(repr=False)
    canonical: bool = dc_field(default=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.rows, dtype=np.int64).reshape(-1, self.ambient)
        if not self.canonical:
            arr, _ = kernels.rref(arr, self.field.p)
        object.__setattr__(self, "rows", _frozen(arr))
        object.__setattr__(self, "canonical", True)

    @property
    def p(self) -> int:
        return self.field.p

    @property
    def dim(self) -> int:
        return self.rows.shape[0]

    @property
    def basis(self) -> Matrix:
        """Column basis, ambient x dim, in reduced column echelon form."""
        return Matrix(self.field, self.rows.T)

    @classmethod
    def zero(cls, field: PrimeField, ambient: int) -> Subspace:
        return cls(field, ambient, np.zeros((0, ambient), dtype=np.int64), canonical=True)

    @classmethod
    def whole(cls, field: PrimeField, ambient: int) -> Subspace:
        return cls(field, ambient, np.eye(ambient, dtype=np.int64), canonical=True)

    @classmethod
    def span_columns(cls, m: Matrix) -> Subspace:
        return cls(m.field, m.rows, m.a.T)

    @classmethod
    def span_rows(cls, field: PrimeField, ambient: int, rows) -> Subspace:
        return cls(field, ambient, np.asarray(rows, dtype=np.int64).reshape(-1, ambient))

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Subspace)
            and self.p == other.p
            and self.ambient == other.ambient
            and self.rows.shape == other.rows.shape
            and bool(np.array_equal(self.rows, other.rows))
        )

    def __hash__(self) -> int:
        return hash((self.p, self.ambient, self.rows.tobytes()))

    def contains(self, other: Subspace) -> bool:
        _same_space(self, other)
        if other.dim == 0:
            return True
        return kernels.rank(np.vstack([self.rows, other.rows]), self.p) == self.dim

    def pad(self, ambient: int) -> Subspace:
        """Embed into a larger ambient space by appending zero coordinates."""
        if ambient < self.ambient:
            raise AmbientMismatch("cannot pad to a smaller ambient dimension")
        out = np.zeros((self.dim, ambient), dtype=np.int64)
        out[:, : self.ambient] = self.rows
        return Subspace(self.field, ambient, out, canonical=True)

    def to_json(self) -> dict:
        d = self.basis.to_json()
        d["ambient"] = self.ambient
        return d

    @classmethod
    def from_json(cls, obj: dict) -> Subspace:
        m = Matrix.from_json(obj)
        ambient = int(obj.get("ambient", m.rows))
        if ambient != m.rows:
            raise InputError("subspace ambient differs from basis row count")
        return cls.span_columns(m)


def _same_space(u: Subspace, w: Subspace) -> None:
    if u.p != w.p or u.ambient != w.ambient:
        raise AmbientMismatch(f"GF({u.p})^{u.ambient} vs GF({w.p})^{w.ambient}")


def subspace_sum(u: Subspace, w: Subspace) -> Subspace:
    _same_space(u, w)
    return Subspace(u.field, u.ambient, np.vstack([u.rows, w.rows]))


def sum_all(field: PrimeField, ambient: int, spaces: Iterable[Subspace]) -> Subspace:
    blocks = [s.rows for s in spaces]
    if not blocks:
        return Subspace.zero(field, ambient)
    return Subspace(field, ambient, np.vstack(blocks))


def subspace_intersect(u: Subspace, w: Subspace) -> Subspace:
    """Intersection via row reduction of [[U, U], [W, 0]].

    Rows of the reduced form whose left half vanishes span U ∩ W.
    """
    _same_space(u, w)
    n = u.ambient
    if u.dim == 0 or w.dim == 0:
        return Subspace.zero(u.field, n)
    top = np.hstack([u.rows, u.rows])
    bottom = np.hstack([w.rows, np.zeros_like(w.rows)])
    r, piv = kernels.rref(np.vstack([top, bottom]), u.p)
    inter = r[piv >= n, n:]
    return Subspace(u.field, n, inter)


def direct_double(u: Subspace) -> Subspace:
    """U ⊕ U inside V ⊕ V."""
    n = u.ambient
    out = np.zeros((2 * u.dim, 2 * n), dtype=np.int64)
    out[: u.dim, :n] = u.rows
    out[u.dim :, n:] = u.rows
    return Subspace(u.field, 2 * n, out)


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, (list, tuple)):
        return np.random.default_rng([int(s) for s in seed])
    return np.random.default_rng(int(seed))


def random_generic_subspace(w: Subspace, d: int, seed) -> Subspace:
    """A seeded random ``d``-dimensional subspace of ``w``.

    Random coefficient combinations of the basis of ``w``; a rank-deficient
    draw is redrawn from the next sub-seed.
    """
    if d < 0 or d > w.dim:
        raise DimensionTooLarge(f"requested {d} inside a {w.dim}-dimensional space")
    if d == 0:
        return Subspace.zero(w.field, w.ambient)
    if d == w.dim:
        return w
    base = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]
    for attempt in range(MAX_RETRIES):
        rng = make_rng(base + [attempt])
        coeff = rng.integers(0, w.p, size=(d, w.dim), dtype=np.int64)
        rows = kernels.matmul(coeff, w.rows, w.p)
        s = Subspace(w.field, w.ambient, rows)
        if s.dim == d:
            return s
    raise GenericityFailure(f"could not draw a {d}-dimensional subspace")


def sample_until(make, check, seed, retries: int = MAX_RETRIES, what: str = "generic choice"):
    """Draw ``make(seed + [retry])`` until ``check`` accepts it.

    Returns (value, retries_used).  Raises GenericityFailure after ``retries``
    rejected draws.
    """
    base = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]
    for r in range(retries):
        value = make(base + [r])
        if check(value):
            return value, r
    raise GenericityFailure(f"{what}: postcondition failed on {retries} draws")


def stack_rows(spaces: Sequence[Subspace], ambient: int) -> np.ndarray:
    if not spaces:
        return np.zeros((0, ambient), dtype=np.int64)
    return np.vstack([s.rows for s in spaces])
