from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forge.errors import GroundSetMismatch, InputError, NotAMatroid, NotAPolymatroid, PreconditionViolation, UnknownElement
from forge.fixtures import X_ID, Y_ID, cube_presentation, toy_matroid
from forge.dowling import build_dowling
from forge.matroids import (
    GroundElement,
    Polymatroid,
    SubsetOrder,
    TriangleMatroid,
    build_subset_order,
    c_m,
    comb_inflate,
    contraction_identity_check,
    contraction_violation,
    double_poly,
    full_comb_pipeline,
    is_extension_poly,
    mask_of,
    matroid_polymatroid,
    popcount,
    restrict,
    triangle_rank,
    validate_polymatroid,
    validate_triangle,
)

from oracle import closure_rank3


@pytest.fixture(scope="module")
def cube():
    return build_dowling(cube_presentation())


@pytest.fixture(scope="module")
def toy():
    return toy_matroid()



def with_entry(g, mask, value):
    t = g.table.copy()
    t[mask] = value
    return Polymatroid(g.n, t, g.labels)


# ---- validation ------------------------------------------------------------


def test_cube_matroid_validates(cube):
    validate_triangle(cube)
    assert cube.n == 12


def test_two_flats_sharing_two_elements_rejected():
    elems = tuple(GroundElement(i, "basis", i + 1) for i in range(3)) + (
        GroundElement(3, "generator", 1, "x"),
        GroundElement(4, "generator", 1, "y"),
    )
    with pytest.raises(NotAMatroid):
        validate_triangle(TriangleMatroid(elems, (0, 1, 2), (frozenset({0, 1, 3}), frozenset({0, 1, 4}))))


def test_element_on_no_basis_line_rejected():
    elems = tuple(GroundElement(i, "basis", i + 1) for i in range(3)) + (GroundElement(3, "generator", 1, "x"),)
    with pytest.raises(NotAMatroid):
        validate_triangle(TriangleMatroid(elems, (0, 1, 2), ()))


def test_flat_containing_basis_rejected():
    elems = tuple(GroundElement(i, "basis", i + 1) for i in range(3)) + (GroundElement(3, "generator", 1, "x"),)
    with pytest.raises(NotAMatroid):
        validate_triangle(TriangleMatroid(elems, (0, 1, 2), (frozenset({0, 1, 2, 3}),)))


def test_json_roundtrip(cube):
    back = TriangleMatroid.from_json(cube.to_json())
    assert back.labels == cube.labels and back.flats2 == cube.flats2 and back.basis == cube.basis


def test_json_bad_label():
    with pytest.raises(InputError):
        TriangleMatroid.from_json({"elements": ["b^(1)", "b^(2)", "b^(3)", "x(1)"], "basis": [0, 1, 2], "flats2": []})


# ---- rank and C_M ----------------------------------------------------------


def test_rank_examples(cube):
    assert triangle_rank(cube, []) == 0
    assert triangle_rank(cube, ["b^(1)", "b^(2)", "b^(3)"]) == 3
    side = ["b^(1)", "b^(2)", "e^(1)", "x^(1)", "x^-1^(1)"]
    assert triangle_rank(cube, side) == 2
    assert triangle_rank(cube, ["x^(1)"]) == 1
    assert triangle_rank(cube, ["x^(1)", "x^(2)"]) == 2


def test_rank_unknown_element(cube):
    with pytest.raises(UnknownElement):
        triangle_rank(cube, ["z^(1)"])


def test_rank_matches_closure_oracle(cube):
    flats = [set(f) for f in cube.flats2]
    table = cube.rank_table
    for x in range(1 << cube.n):
        ids = [i for i in range(cube.n) if x >> i & 1]
        assert table[x] == closure_rank3(flats, ids)


def test_cm_examples(cube):
    assert c_m(cube, 0) == 0
    assert c_m(cube, cube.to_mask(["x^(1)"])) is None
    assert c_m(cube, cube.to_mask(["x^(1)", "e^(1)"])) == cube.to_mask(["b^(1)", "b^(2)"])
    # the relation line meets no basis pair
    assert c_m(cube, cube.to_mask(["x^(1)", "x^(2)"])) is None
    assert c_m(cube, cube.to_mask(["x^(1)", "x^(2)", "e^(1)"])) == cube.basis_mask


def test_cm_definition_exhaustive(cube):
    r = cube.rank_table
    basis_subsets = [mask_of(c) for k in range(4) for c in itertools.combinations(cube.basis, k)]
    for s in range(0, 1 << cube.n, 7):
        matches = [d for d in basis_subsets if r[s] == r[s | d] == r[d]]
        assert len(matches) <= 1
        assert c_m(cube, s) == (matches[0] if matches else None)


def test_restrict_keeps_lines(cube):
    ids = list(cube.basis) + [cube.id_of("x^(1)"), cube.id_of("e^(1)")]
    sub = restrict(cube, ids)
    assert sub.labels == ("b^(1)", "b^(2)", "b^(3)", "x^(1)", "e^(1)")
    assert sub.flats2 == (frozenset({0, 1, 3, 4}),)


def test_restrict_must_keep_basis(cube):
    with pytest.raises(PreconditionViolation):
        restrict(cube, [0, 1, 6])


# ---- polymatroids ----------------------------------------------------------


def test_matroid_rank_is_polymatroid(cube):
    validate_polymatroid(matroid_polymatroid(cube))


def test_non_monotone_rejected():
    g = Polymatroid(2, np.array([0, 2, 0, 1], dtype=np.int64), ("a", "b"))
    with pytest.raises(NotAPolymatroid):
        validate_polymatroid(g)


def test_non_submodular_rejected():
    g = Polymatroid(2, np.array([0, 1, 1, 3], dtype=np.int64), ("a", "b"))
    with pytest.raises(NotAPolymatroid):
        validate_polymatroid(g)


def test_nonzero_empty_rejected():
    with pytest.raises((NotAPolymatroid, InputError)):
        validate_polymatroid(Polymatroid(1, np.array([1, 1], dtype=np.int64), ("a",)))


def test_polymatroid_json_roundtrip(toy):
    g = matroid_polymatroid(toy)
    assert Polymatroid.from_json(g.to_json()) == g


def test_rank_is_extension(toy, cube):
    assert is_extension_poly(matroid_polymatroid(toy), toy)
    assert is_extension_poly(matroid_polymatroid(cube), cube)


def test_bumped_top_not_extension(toy):
    r = matroid_polymatroid(toy)
    assert not is_extension_poly(with_entry(r, toy.full_mask, 4), toy)


def test_extension_ground_mismatch(toy, cube):
    with pytest.raises(GroundSetMismatch):
        is_extension_poly(matroid_polymatroid(cube), toy)


# ---- combinatorial inflation ----------------------------------------------


def test_comb_inflate_toy_examples(toy):
    r = matroid_polymatroid(toy)
    x, y = 1 << X_ID, 1 << Y_ID
    g = comb_inflate(r, toy, x)
    assert g(x) == 2
    assert g(1 << toy.basis[0]) == 1
    assert g(x | y) == 3
    assert g(toy.basis_mask | x) == r(toy.basis_mask | x) + 1 == 4
    for t in range(1 << toy.n):
        if not t & x:
            assert g(t) == r(t)


def test_comb_inflate_preconditions(toy):
    r = matroid_polymatroid(toy)
    with pytest.raises(PreconditionViolation):
        comb_inflate(r, toy, 0)
    with pytest.raises(PreconditionViolation):
        comb_inflate(r, toy, 1 << toy.basis[0])
    with pytest.raises(PreconditionViolation):
        comb_inflate(with_entry(r, toy.full_mask, 4), toy, 1 << X_ID)


def _decomposition(g, m, s):
    """g composed with closure under C_M(s), plus free rank and uniform rank of size |s| - 1 on s."""
    cm = c_m(m, s) or 0
    k = popcount(s)
    out = []
    for x in range(1 << m.n):
        z = popcount(x & s)
        base = g(x | cm) if x & s == s else g(x)
        out.append(base + z + min(z, k - 1))
    return np.array(out, dtype=np.int64)


@pytest.mark.parametrize("s_ids", [[X_ID], [Y_ID], [X_ID, Y_ID]])
def test_comb_inflate_is_free_plus_uniform(toy, s_ids):
    r = matroid_polymatroid(toy)
    s = mask_of(s_ids)
    g = comb_inflate(r, toy, s)
    assert np.array_equal(g.table, _decomposition(r, toy, s))
    validate_polymatroid(g)
    assert is_extension_poly(g, toy)


def test_comb_inflate_on_cube_subsets(cube):
    r = matroid_polymatroid(cube)
    g = r
    for labels in (["x^(1)"], ["x^(1)", "e^(1)"], ["x^(2)", "x^(1)"], ["e^(1)", "e^(2)", "e^(3)"]):
        s = cube.to_mask(labels)
        nxt = comb_inflate(g, cube, s)
        assert np.array_equal(nxt.table, _decomposition(g, cube, s))
        validate_polymatroid(nxt)
        assert is_extension_poly(nxt, cube)
        g = nxt


# ---- orders and pipelines --------------------------------------------------


def test_subset_order_toy(toy):
    assert build_subset_order(toy).order == (0, 1 << X_ID, 1 << Y_ID, (1 << X_ID) | (1 << Y_ID))


def test_subset_order_cube_refines_inclusion(cube):
    order = build_subset_order(cube).order
    assert len(order) == 512 and order[0] == 0
    pos = {s: i for i, s in enumerate(order)}
    for a in order:
        for b in order:
            if a & b == a:
                assert pos[a] <= pos[b]


def test_subset_order_violation_detected(toy):
    bad = SubsetOrder((0, (1 << X_ID) | (1 << Y_ID), 1 << X_ID, 1 << Y_ID))
    assert bad.violation() is not None


def test_pipeline_counts(toy):
    seq = full_comb_pipeline(toy, build_subset_order(toy))
    assert len(seq) == 4
    assert full_comb_pipeline(toy, build_subset_order(toy), max_steps=0) == [matroid_polymatroid(toy)]
    for g in seq:
        validate_polymatroid(g)
        assert is_extension_poly(g, toy)


def test_pipeline_order_independent(toy):
    x, y = 1 << X_ID, 1 << Y_ID
    a = full_comb_pipeline(toy, SubsetOrder((0, x, y, x | y)))[-1]
    b = full_comb_pipeline(toy, SubsetOrder((0, y, x, x | y)))[-1]
    assert a == b


def test_pipeline_toy_final_top(toy):
    # three inflations: two singletons add 1 each, the pair adds 3
    g = full_comb_pipeline(toy, build_subset_order(toy))[-1]
    assert g(toy.full_mask) == 3 + 1 + 1 + 3


# ---- doubling and contraction identity -------------------------------------


def test_double_poly(toy):
    r = matroid_polymatroid(toy)
    assert double_poly(r)(toy.basis_mask) == 6
    assert double_poly(double_poly(r)) == Polymatroid(r.n, 4 * r.table, r.labels)
    assert not is_extension_poly(double_poly(r), toy)


def test_contraction_identity_rank(toy, cube):
    assert contraction_identity_check(matroid_polymatroid(toy), toy)
    assert contraction_identity_check(matroid_polymatroid(cube), cube)


def test_contraction_identity_pipeline(toy):
    for g in full_comb_pipeline(toy, build_subset_order(toy)):
        assert contraction_identity_check(g, toy)


def test_contraction_identity_corrupted(toy):
    r = matroid_polymatroid(toy)
    bad = with_entry(r, toy.basis_mask | (1 << X_ID), 4)
    assert contraction_violation(bad, toy) is not None


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from([1, 2, 3]), min_size=1, max_size=4))
def test_random_inflation_chains_stay_extensions(picks):
    m = toy_matroid()
    subsets = {1: 1 << X_ID, 2: 1 << Y_ID, 3: (1 << X_ID) | (1 << Y_ID)}
    g = matroid_polymatroid(m)
    for k in picks:
        g = comb_inflate(g, m, subsets[k])
        validate_polymatroid(g)
        assert is_extension_poly(g, m)
        assert contraction_identity_check(g, m)
