"""Permutations and the closed-form rank identities for block matrices."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from forge.errors import AuditFailure, InputError, NotADerangement, ShapeMismatch
from forge.exactla.core import Matrix, PrimeField, mat_rank


@dataclass(frozen=True)
class Permutation:
    images: tuple[int, ...]

    def __post_init__(self) -> None:
        imgs = tuple(int(i) for i in self.images)
        if sorted(imgs) != list(range(len(imgs))):
            raise InputError(f"{imgs} is not a bijection on 0..{len(imgs) - 1}")
        object.__setattr__(self, "images", imgs)

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i]

    def compose(self, other: Permutation) -> Permutation:
        """self after other."""
        return Permutation(tuple(self.images[other.images[i]] for i in range(other.n)))

    def fixed_points(self) -> list[int]:
        return [i for i, j in enumerate(self.images) if i == j]

    def cycle_count(self) -> int:
        seen = [False] * self.n
        count = 0
        for start in range(self.n):
            if seen[start]:
                continue
            count += 1
            j = start
            while not seen[j]:
                seen[j] = True
                j = self.images[j]
        return count

    def matrix(self, field: PrimeField) -> Matrix:
        """P with P e_i = e_{sigma(i)}."""
        a = np.zeros((self.n, self.n), dtype=np.int64)
        for i, j in enumerate(self.images):
            a[j, i] = 1
        return Matrix(field, a)


def _square(*ms: Matrix) -> int:
    k = ms[0].rows
    for m in ms:
        if m.rows != k or m.cols != k:
            raise ShapeMismatch(f"expected {k}x{k}, got {m.rows}x{m.cols}")
        if m.p != ms[0].p:
            raise ShapeMismatch("matrices over different fields")
    return k


def block_pair_matrix(a: Matrix, b: Matrix) -> Matrix:
    """[[-I, -I], [A, B], [0, 0]]."""
    k = _square(a, b)
    i = np.eye(k, dtype=np.int64)
    z = np.zeros((k, k), dtype=np.int64)
    return Matrix(a.field, np.block([[-i, -i], [a.a, b.a], [z, z]]))


def block_triple_matrix(a: Matrix, b: Matrix, c: Matrix) -> Matrix:
    """[[-I, 0, C], [A, -I, 0], [0, B, -I]]."""
    k = _square(a, b, c)
    i = np.eye(k, dtype=np.int64)
    z = np.zeros((k, k), dtype=np.int64)
    return Matrix(a.field, np.block([[-i, z, c.a], [a.a, -i, z], [z, b.a, -i]]))


def block_rank_pair(a: Matrix, b: Matrix) -> int:
    k = _square(a, b)
    closed = k + mat_rank(b - a)
    literal = mat_rank(block_pair_matrix(a, b))
    if closed != literal:
        raise AuditFailure(f"pair block rank {literal} != k + rk(B-A) = {closed}")
    return closed


def block_rank_triple(a: Matrix, b: Matrix, c: Matrix) -> int:
    k = _square(a, b, c)
    closed = 2 * k + mat_rank(b @ a @ c - Matrix.identity(a.field, k))
    literal = mat_rank(block_triple_matrix(a, b, c))
    if closed != literal:
        raise AuditFailure(f"triple block rank {literal} != 2k + rk(BAC-I) = {closed}")
    return closed


def derangement_rank(sigma: Permutation, field: PrimeField) -> tuple[int, int]:
    """(rank of P_sigma - I, number of cycles) for a fixed-point-free sigma."""
    fixed = sigma.fixed_points()
    if fixed:
        raise NotADerangement(f"fixed points {fixed}")
    m = sigma.matrix(field) - Matrix.identity(field, sigma.n)
    rk = mat_rank(m)
    cycles = sigma.cycle_count()
    if rk != sigma.n - cycles:
        raise AuditFailure(f"rank {rk} != n - cycles = {sigma.n - cycles}")
    return rk, cycles
