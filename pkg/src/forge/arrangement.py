"""Subspace arrangements indexed by ground-element ids."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from forge.errors import AmbientMismatch, InputError
from forge.exactla import PrimeField, Subspace, sum_all
from forge.exactla import kernels
from forge.matroids import bits


@dataclass(frozen=True, eq=False)
class Arrangement:
    field: PrimeField
    ambient: int
    c: int
    subspaces: tuple[Subspace, ...]

    def __post_init__(self) -> None:
        subs = tuple(self.subspaces)
        for s in subs:
            if s.p != self.field.p or s.ambient != self.ambient:
                raise AmbientMismatch("arrangement members must share field and ambient space")
        if self.c < 1:
            raise InputError("c must be a positive integer")
        object.__setattr__(self, "subspaces", subs)

    @property
    def p(self) -> int:
        return self.field.p

    @property
    def n(self) -> int:
        return len(self.subspaces)

    def __getitem__(self, i: int) -> Subspace:
        return self.subspaces[i]

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Arrangement)
            and self.p == other.p
            and self.ambient == other.ambient
            and self.c == other.c
            and self.subspaces == other.subspaces
        )

    def __hash__(self) -> int:
        return hash((self.p, self.ambient, self.c, self.subspaces))

    def dims(self) -> list[int]:
        return [s.dim for s in self.subspaces]

    def span(self, mask: int) -> Subspace:
        return sum_all(self.field, self.ambient, [self.subspaces[i] for i in bits(mask)])

    def dim_of(self, mask: int) -> int:
        return int(self.dims_of([mask])[0])

    def dims_of(self, masks: Sequence[int], base: Subspace | None = None) -> np.ndarray:
        """dim(base + U_mask) for each mask."""
        return kernels.span_ranks(
            [s.rows for s in self.subspaces],
            np.asarray(list(masks), dtype=np.int64),
            self.p,
            self.ambient,
            base=None if base is None else base.rows,
        )

    def rank_table(self, base: Subspace | None = None, elements: Sequence[int] | None = None) -> np.ndarray:
        """dim(base + U_X) for all X.

        With ``elements`` given, X ranges over subsets of those elements and the
        table is indexed by bitmasks over their positions in ``elements``.
        """
        ids = range(self.n) if elements is None else elements
        return kernels.rank_table(
            [self.subspaces[i].rows for i in ids],
            self.p,
            self.ambient,
            base=None if base is None else base.rows,
        )

    def pad(self, ambient: int) -> Arrangement:
        return Arrangement(self.field, ambient, self.c, tuple(s.pad(ambient) for s in self.subspaces))

    def replace(self, updates: dict[int, Subspace]) -> Arrangement:
        subs = list(self.subspaces)
        for i, s in updates.items():
            subs[i] = s
        return Arrangement(self.field, self.ambient, self.c, tuple(subs))

    def restrict(self, ids: Sequence[int]) -> Arrangement:
        return Arrangement(self.field, self.ambient, self.c, tuple(self.subspaces[i] for i in ids))

    def with_c(self, c: int) -> Arrangement:
        return Arrangement(self.field, self.ambient, c, self.subspaces)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "ambient": self.ambient,
            "c": self.c,
            "subspaces": {str(i): s.to_json() for i, s in enumerate(self.subspaces)},
        }

    @classmethod
    def from_json(cls, obj: dict) -> Arrangement:
        try:
            f = PrimeField(int(obj["p"]))
            ambient = int(obj["ambient"])
            raw = obj["subspaces"]
            ids = sorted(int(k) for k in raw)
            if ids != list(range(len(ids))):
                raise InputError("subspace ids must be 0..n-1")
            subs = tuple(Subspace.from_json(raw[str(i)]) for i in ids)
            for s in subs:
                if s.p != f.p:
                    raise InputError("subspace field differs from arrangement field")
            return cls(f, ambient, int(obj["c"]), subs)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad arrangement json: {exc}") from exc


def is_c_homogeneous(a: Arrangement) -> bool:
    return all(s.dim == a.c for s in a.subspaces)
