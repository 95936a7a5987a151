from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forge.errors import AmbientMismatch, DimensionTooLarge, InputError, NotADerangement, ShapeMismatch
from forge.exactla import (
    Matrix,
    Permutation,
    PrimeField,
    Subspace,
    block_pair_matrix,
    block_rank_pair,
    block_rank_triple,
    block_triple_matrix,
    derangement_rank,
    direct_double,
    mat_rank,
    random_generic_subspace,
    subspace_intersect,
    subspace_sum,
)
from forge.exactla import kernels

from oracle import cycles_of, rank_mod

F7 = PrimeField(7)
F1009 = PrimeField(1009)


def M(field, rows):
    return Matrix(field, np.array(rows, dtype=np.int64))


def coord(field, n, *idx):
    rows = np.zeros((len(idx), n), dtype=np.int64)
    for r, i in enumerate(idx):
        rows[r, i] = 1
    return Subspace.span_rows(field, n, rows)


def rand_space(rng, field, n, d):
    return Subspace.span_rows(field, n, rng.integers(0, field.p, (d, n)))


# ---- field and matrix plumbing -------------------------------------------


def test_non_prime_rejected():
    with pytest.raises(InputError):
        PrimeField(9)


def test_matrix_entries_reduced_mod_p():
    m = M(F7, [[8, -1]])
    assert m.a.tolist() == [[1, 6]]


def test_matrix_json_roundtrip():
    m = M(F1009, [[1, 2, 3], [4, 5, 6]])
    assert Matrix.from_json(m.to_json()) == m


def test_matrix_json_length_checked():
    with pytest.raises(InputError):
        Matrix.from_json({"p": 7, "rows": 2, "cols": 2, "entries": [1, 2, 3]})


def test_inverse():
    m = M(F1009, [[2, 1], [7, 4]])
    assert m @ m.inverse() == Matrix.identity(F1009, 2)


# ---- mat_rank --------------------------------------------------------------


def test_rank_identity():
    assert mat_rank(Matrix.identity(F7, 3)) == 3


def test_rank_zero():
    assert mat_rank(Matrix.zeros(F7, 4, 2)) == 0


def test_rank_dependent_rows():
    assert mat_rank(M(F7, [[1, 2], [2, 4]])) == 1


@settings(max_examples=60, deadline=None)
@given(
    st.sampled_from([2, 7, 1009, 1_000_003, 2_147_483_647]),
    st.integers(1, 7),
    st.integers(1, 7),
    st.integers(0, 2**32 - 1),
)
def test_rank_matches_oracle(p, r, c, seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, p, (r, c))
    # force some dependence half the time
    if r > 1 and seed % 2:
        a[-1] = (a[0] * 3 + a[1 % r]) % p
    assert mat_rank(Matrix(PrimeField(p), a)) == rank_mod(a.tolist(), p)


@pytest.mark.parametrize("use_numba", [True, False])
def test_kernel_paths_agree(use_numba):
    rng = np.random.default_rng(3)
    p = 1009
    for _ in range(20):
        a = rng.integers(0, p, (6, 9))
        a[4] = (a[1] + 5 * a[2]) % p
        assert kernels.rank(a, p, use_numba=use_numba) == rank_mod(a.tolist(), p)
        r1, p1 = kernels.rref(a, p, use_numba=True)
        r2, p2 = kernels.rref(a, p, use_numba=False)
        assert np.array_equal(r1, r2) and np.array_equal(p1, p2)


def test_rank_table_paths_agree():
    rng = np.random.default_rng(5)
    p = 101
    n = 8
    blocks = [rng.integers(0, p, (rng.integers(1, 4), n)) for _ in range(5)]
    base = rng.integers(0, p, (2, n))
    t1 = kernels.rank_table(blocks, p, n, base=base, use_numba=True)
    t2 = kernels.rank_table(blocks, p, n, base=base, use_numba=False)
    assert np.array_equal(t1, t2)
    s = kernels.span_ranks(blocks, np.arange(32), p, n, base=base, use_numba=False)
    assert np.array_equal(t1, s)
    for mask in range(32):
        rows = base.tolist() + [r for e in range(5) if mask >> e & 1 for r in blocks[e].tolist()]
        assert t1[mask] == rank_mod(rows, p)


def test_lazy_reduction_near_int64_limit():
    # the largest admissible prime forces the early-reduction path constantly
    p = 2_147_483_647
    rng = np.random.default_rng(11)
    a = rng.integers(0, p, (12, 12))
    a[7] = (a[0] + a[3]) % p
    assert kernels.rank(a, p, use_numba=True) == rank_mod(a.tolist(), p) == 11


# ---- subspaces -------------------------------------------------------------


def test_sum_idempotent():
    u = rand_space(np.random.default_rng(0), F1009, 4, 2)
    assert subspace_sum(u, u) == u


def test_sum_of_coordinate_lines():
    assert subspace_sum(coord(F7, 3, 0), coord(F7, 3, 1)).dim == 2


def test_sum_of_random_planes_in_3space():
    rng = np.random.default_rng(1)
    u, w = rand_space(rng, F1009, 3, 2), rand_space(rng, F1009, 3, 2)
    s = subspace_sum(u, w)
    assert s.dim == 3 == rank_mod(np.vstack([u.rows, w.rows]).tolist(), 1009)


def test_intersect_self():
    u = rand_space(np.random.default_rng(2), F1009, 5, 3)
    assert subspace_intersect(u, u) == u


def test_intersect_coordinate_lines():
    assert subspace_intersect(coord(F7, 3, 0), coord(F7, 3, 1)).dim == 0


def test_intersect_random_planes_in_3space():
    rng = np.random.default_rng(4)
    u, w = rand_space(rng, F1009, 3, 2), rand_space(rng, F1009, 3, 2)
    i = subspace_intersect(u, w)
    assert i.dim == 1
    assert u.contains(i) and w.contains(i)
    assert u.dim + w.dim == subspace_sum(u, w).dim + i.dim


def test_ambient_mismatch():
    with pytest.raises(AmbientMismatch):
        subspace_sum(coord(F7, 3, 0), coord(F7, 4, 0))
    with pytest.raises(AmbientMismatch):
        subspace_intersect(coord(F7, 3, 0), coord(F1009, 3, 0))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 7, 1009]))
def test_dimension_formula(seed, p):
    rng = np.random.default_rng(seed)
    f = PrimeField(p)
    n = int(rng.integers(1, 7))
    shared = rng.integers(0, p, (int(rng.integers(0, n + 1)), n))
    u = Subspace.span_rows(f, n, np.vstack([shared, rng.integers(0, p, (int(rng.integers(0, n)), n))]))
    w = Subspace.span_rows(f, n, np.vstack([shared, rng.integers(0, p, (int(rng.integers(0, n)), n))]))
    s, i = subspace_sum(u, w), subspace_intersect(u, w)
    assert s.dim + i.dim == u.dim + w.dim
    assert s.contains(u) and s.contains(w) and u.contains(i) and w.contains(i)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_canonical_form_unique(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(1, 7)), int(rng.integers(0, 5))
    u = rand_space(rng, F1009, n, d)
    # random invertible column operations on the column basis
    g = rng.integers(0, 1009, (u.dim, u.dim))
    while u.dim and rank_mod(g.tolist(), 1009) < u.dim:
        g = rng.integers(0, 1009, (u.dim, u.dim))
    mixed = (g @ u.rows) % 1009 if u.dim else u.rows
    v = Subspace.span_rows(F1009, n, mixed)
    assert v == u
    assert v.rows.tobytes() == u.rows.tobytes()


def test_subspace_json_recanonicalizes():
    u = rand_space(np.random.default_rng(8), F1009, 5, 2)
    raw = u.to_json()
    assert raw["rows"] == 5 and raw["cols"] == 2 and raw["ambient"] == 5
    # scramble the columns: deserializing must land on the same canonical basis
    cols = np.array(raw["entries"]).reshape(5, 2)
    scrambled = np.stack([(cols[:, 0] + cols[:, 1]) % 1009, (2 * cols[:, 1]) % 1009], axis=1)
    raw["entries"] = scrambled.reshape(-1).tolist()
    assert Subspace.from_json(raw) == u


def test_double_dims():
    u = rand_space(np.random.default_rng(9), F1009, 4, 2)
    d = direct_double(u)
    assert d.ambient == 8 and d.dim == 4


# ---- generic subspaces -------------------------------------------------------


def test_generic_zero_dim():
    w = rand_space(np.random.default_rng(0), F1009, 4, 3)
    assert random_generic_subspace(w, 0, 1).dim == 0


def test_generic_full_dim_is_w():
    w = rand_space(np.random.default_rng(0), F1009, 4, 3)
    assert random_generic_subspace(w, 3, 1) == w


def test_generic_consecutive_seeds_span():
    w = rand_space(np.random.default_rng(0), F1009, 6, 4)
    a = random_generic_subspace(w, 2, 10)
    b = random_generic_subspace(w, 2, 11)
    assert w.contains(a) and w.contains(b)
    assert subspace_sum(a, b).dim == 4


def test_generic_deterministic():
    w = rand_space(np.random.default_rng(0), F1009, 6, 4)
    assert random_generic_subspace(w, 2, [3, 4]) == random_generic_subspace(w, 2, [3, 4])


def test_generic_too_large():
    w = rand_space(np.random.default_rng(0), F1009, 4, 2)
    with pytest.raises(DimensionTooLarge):
        random_generic_subspace(w, 3, 0)


# ---- block lemmas ------------------------------------------------------------


def test_pair_equal_blocks():
    a = M(F7, [[1, 2], [3, 4]])
    assert block_rank_pair(a, a) == 2


def test_pair_scalar():
    assert block_rank_pair(M(F7, [[2]]), M(F7, [[5]])) == 2


def test_pair_elementary():
    i = Matrix.identity(F7, 2)
    assert block_rank_pair(i, M(F7, [[1, 1], [0, 1]])) == 3


def test_triple_identity():
    i = Matrix.identity(F7, 3)
    assert block_rank_triple(i, i, i) == 6


def test_triple_scalar_product_one():
    # 4*2*1 = 8 = 1 mod 7 so BAC - I vanishes
    assert block_rank_triple(M(F7, [[2]]), M(F7, [[4]]), M(F7, [[1]])) == 2


def test_triple_scalar_product_not_one():
    assert block_rank_triple(M(F7, [[2]]), M(F7, [[3]]), M(F7, [[1]])) == 3


def test_block_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        block_rank_pair(Matrix.identity(F7, 2), Matrix.identity(F7, 3))
    with pytest.raises(ShapeMismatch):
        block_rank_triple(Matrix.identity(F7, 2), Matrix.identity(F7, 2), Matrix.zeros(F7, 2, 3))


def test_block_literal_layout():
    a, b, c = M(F7, [[2]]), M(F7, [[3]]), M(F7, [[5]])
    assert block_pair_matrix(a, b).a.tolist() == [[6, 6], [2, 3], [0, 0]]
    assert block_triple_matrix(a, b, c).a.tolist() == [[6, 0, 5], [2, 6, 0], [0, 3, 6]]


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3), st.sampled_from([7, 1009]), st.integers(0, 2**32 - 1))
def test_block_lemmas_against_oracle(k, p, seed):
    rng = np.random.default_rng(seed)
    f = PrimeField(p)
    a, b, c = (Matrix(f, rng.integers(0, p, (k, k))) for _ in range(3))
    assert block_rank_pair(a, b) == rank_mod(block_pair_matrix(a, b).a.tolist(), p)
    assert block_rank_triple(a, b, c) == rank_mod(block_triple_matrix(a, b, c).a.tolist(), p)


# ---- permutations --------------------------------------------------------------


def test_double_transposition():
    assert derangement_rank(Permutation((1, 0, 3, 2)), F7) == (2, 2)


def test_four_cycle():
    assert derangement_rank(Permutation((1, 2, 3, 0)), F7) == (3, 1)


def test_identity_not_derangement():
    with pytest.raises(NotADerangement):
        derangement_rank(Permutation((0, 1, 2)), F7)


def test_bad_permutation():
    with pytest.raises(InputError):
        Permutation((0, 0, 1))


@pytest.mark.parametrize("n,count", [(4, 9), (5, 44)])
def test_all_derangements(n, count):
    found = 0
    for images in itertools.permutations(range(n)):
        if any(i == j for i, j in enumerate(images)):
            continue
        found += 1
        rk, cyc = derangement_rank(Permutation(images), F1009)
        assert cyc == cycles_of(images)
        assert rk == n - cyc >= -(-n // 2)
        assert rk == rank_mod((Permutation(images).matrix(F1009) - Matrix.identity(F1009, n)).a.tolist(), 1009)
    assert found == count
