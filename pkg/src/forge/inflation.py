"""Algebraic inflation of subspace arrangements over a triangle matroid."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from forge.arrangement import Arrangement
from forge.dowling import is_weak_rep, weak_rep_violation
from forge.errors import AuditFailure, InputError, NotCAdmissible, OddC, PreconditionViolation
from forge.exactla import Subspace, direct_double, make_rng, random_generic_subspace, sample_until, subspace_intersect, subspace_sum
from forge.io import digest
from forge.matroids import Polymatroid, SubsetOrder, TriangleMatroid, bits, c_m, mask_of, popcount, submasks

# exhaustive checks up to this many elements, sampled beyond
EXHAUSTIVE_MAX = 8
SAMPLE_T = 64
# every superset of s is checked while there are at most 2^10 of them
SUPERSETS_MAX_BITS = 10


def _mode(check: str, n: int) -> str:
    if check == "auto":
        return "full" if n <= EXHAUSTIVE_MAX else "sample"
    if check not in ("full", "sample", "off"):
        raise PreconditionViolation(f"unknown check mode {check!r}")
    return check


def _basis_subsets(m: TriangleMatroid) -> list[int]:
    return submasks(m.basis_mask)


def _expand(ids: list[int]) -> np.ndarray:
    """Bitmask over ``ids`` for every position-indexed subset."""
    out = np.zeros(1 << len(ids), dtype=np.int64)
    for j, e in enumerate(ids):
        out[1 << j:2 << j] = out[: 1 << j] | (1 << e)
    return out


# ---- extensions, defect, fullness ------------------------------------------


def defect(u: Arrangement, m: TriangleMatroid, s: int) -> int:
    """c r(s) - dim(U_s cap U_B)."""
    b = m.basis_mask
    d_s, d_b, d_sb = (int(x) for x in u.dims_of([s, b, s | b]))
    return u.c * int(m.rank_table[s]) - (d_s + d_b - d_sb)


def is_full(u: Arrangement, m: TriangleMatroid, s: int) -> bool:
    return s == 0 or defect(u, m, s) == 0


def intersect_to_weak(u: Arrangement, basis) -> Arrangement:
    ub = u.span(mask_of(basis))
    return Arrangement(u.field, u.ambient, u.c, tuple(subspace_intersect(s, ub) for s in u.subspaces))


def extension_violation(u: Arrangement, m: TriangleMatroid) -> tuple[int, int] | None:
    """A pair (T, D) breaking dim(U_T cap U_D) <= c(r(T)+r(D)-r(T u D)).

    Returns (-1, -1) when the intersected family is not a weak representation.

    Only T of rank at most 2 are scanned: once dim U_D = c r(D) (part of the
    weak representation check), a rank-3 T has right-hand side c r(D) and the
    bound holds automatically.
    """
    if u.n != m.n:
        raise PreconditionViolation(f"arrangement has {u.n} members, matroid {m.n} elements")
    if weak_rep_violation(intersect_to_weak(u, m.basis), m) is not None:
        return -1, -1
    r = m.rank_table
    ts = np.flatnonzero(r <= 2)
    ds = np.array(_basis_subsets(m), dtype=np.int64)
    c = u.c
    dim_t = u.dims_of(ts)
    dim_d = u.dims_of(ds)
    for j, d in enumerate(ds):
        dim_td = u.dims_of(ts | d)
        inter = dim_t + dim_d[j] - dim_td
        bound = c * (r[ts] + r[d] - r[ts | d])
        bad = np.flatnonzero(inter > bound)
        if bad.size:
            return int(ts[bad[0]]), int(d)
    return None


def is_extension_arr(u: Arrangement, m: TriangleMatroid) -> bool:
    return extension_violation(u, m) is None


# ---- elementary inflation ---------------------------------------------------


def _lemma_masks(n: int, s: int, mode: str, rng: np.random.Generator) -> np.ndarray:
    if mode == "full":
        return np.arange(1 << n, dtype=np.int64)
    full = (1 << n) - 1
    rand = rng.integers(0, 1 << n, size=SAMPLE_T, dtype=np.int64)
    rest = [i for i in range(n) if not s >> i & 1]
    if len(rest) <= SUPERSETS_MAX_BITS:
        sup = _expand(rest) | s
    else:
        sup = rng.integers(0, 1 << n, size=SAMPLE_T, dtype=np.int64) | s
    subs = np.array(submasks(s), dtype=np.int64)
    return np.unique(np.concatenate([rand, sup, subs, [0, full]]))


def lemma_violation(
    before: Arrangement, after: Arrangement, s: int, d: int, w_prime: Subspace, piece: int, masks: np.ndarray
) -> int | None:
    """First T where the change dim U'_T - dim U_T differs from the elementary inflation formula."""
    old = before.dims_of(masks)
    with_w = before.dims_of(masks, base=w_prime)
    meet = old + w_prime.dim - with_w
    new = after.dims_of(masks)
    inside = (masks & s) == s
    meets_s = np.array([popcount(int(t) & s) for t in masks], dtype=np.int64)
    expected = np.where(inside, d - meet, piece * meets_s)
    bad = np.flatnonzero(new - old != expected)
    return int(masks[bad[0]]) if bad.size else None


def elementary_inflation(
    u: Arrangement, s: int, d: int, w_prime: Subspace, seed, check: str = "auto"
) -> tuple[Arrangement, int, dict[int, Subspace]]:
    """Enlarge U_e for e in ``s`` by generic pieces of a d-dimensional W meeting the old space in ``w_prime``.

    Fresh coordinates are appended so that W = w_prime + (new coordinates).
    Each piece has dimension min(c, d).  Returns the new arrangement, the
    number of rejected draws and the piece added to each member of ``s``.
    """
    c, size = u.c, popcount(s)
    if s == 0 or s >> u.n:
        raise PreconditionViolation("inflation subset must be a nonempty set of elements")
    if not c * (size - 1) <= d <= c * size:
        raise PreconditionViolation(f"d = {d} outside [{c * (size - 1)}, {c * size}]")
    k = w_prime.dim
    if w_prime.ambient != u.ambient or w_prime.p != u.p:
        raise PreconditionViolation("w_prime must live in the arrangement's ambient space")
    if k > min(c, d):
        raise PreconditionViolation(f"dim w_prime = {k} exceeds min(c, d) = {min(c, d)}")
    ambient = u.ambient + d - k
    base = u.pad(ambient)
    wp = w_prime.pad(ambient)
    fresh = np.zeros((d - k, ambient), dtype=np.int64)
    fresh[np.arange(d - k), u.ambient + np.arange(d - k)] = 1
    w = Subspace(u.field, ambient, np.vstack([wp.rows, fresh]))
    piece = min(c, d)
    members = bits(s)

    def make(sd):
        pieces = {e: random_generic_subspace(w, piece, sd + [e]) for e in members}
        return base.replace({e: subspace_sum(base[e], pieces[e]) for e in members}), pieces

    mode = _mode(check, u.n)
    if mode == "off":
        out, pieces = make(_seed_list(seed) + [0])
        return out, 0, pieces
    masks = _lemma_masks(u.n, s, mode, make_rng(_seed_list(seed) + [1 << 20]))

    def ok(v):
        return lemma_violation(base, v[0], s, d, wp, piece, masks) is None

    (out, pieces), retries = sample_until(make, ok, seed, what="elementary inflation")
    return out, retries, pieces


def _seed_list(seed) -> list[int]:
    return [int(x) for x in seed] if isinstance(seed, (list, tuple)) else [int(seed)]


# ---- two-step inflation -----------------------------------------------------


def theorem_violation(
    before: Arrangement, after: Arrangement, m: TriangleMatroid, s: int, ts: np.ndarray
) -> tuple[int, int] | None:
    """First (T, Z) with T disjoint from s where the two-case rank formula fails.

    Z a proper subset of s: dim' (T u Z) = dim(T u Z) + 2c|Z|.
    Z = s: dim'(T u s) = dim(T u s u C_M(s)) + c(2|s| - 1).
    """
    c = before.c
    cm = c_m(m, s) or 0
    for z in submasks(s):
        new = after.dims_of(ts | z)
        if z == s:
            want = before.dims_of(ts | s | cm) + c * (2 * popcount(s) - 1)
        else:
            want = before.dims_of(ts | z) + 2 * c * popcount(z)
        bad = np.flatnonzero(new != want)
        if bad.size:
            return int(ts[bad[0]]), z
    return None


def _theorem_masks(m: TriangleMatroid, s: int, mode: str, rng: np.random.Generator) -> np.ndarray:
    others = [i for i in range(m.n) if not s >> i & 1]
    every = _expand(others)
    if mode == "full" or every.size <= SAMPLE_T:
        return every
    pick = every[rng.integers(0, every.size, size=SAMPLE_T)]
    return np.unique(np.concatenate([pick, np.array(_basis_subsets(m), dtype=np.int64)]))


def inflate(u: Arrangement, m: TriangleMatroid, s: int, seed, check: str = "auto") -> tuple[Arrangement, dict]:
    """Make ``s`` full: an S-inflation followed by a B-inflation with W' inside U_{C_M(s)}."""
    if s == 0 or s & m.basis_mask or s >> m.n:
        raise PreconditionViolation("inflation subset must be a nonempty set of non-basis elements")
    for z in submasks(s)[1:-1]:
        if not is_full(u, m, z):
            raise PreconditionViolation(f"proper subset {bits(z)} of {bits(s)} is not full")
    c, k = u.c, popcount(s)
    de = defect(u, m, s)
    if not 0 <= de <= c:
        raise AuditFailure(f"defect {de} of {bits(s)} outside [0, {c}]")
    cm = c_m(m, s)
    if cm is None and de:
        raise AuditFailure(f"{bits(s)} has no basis closure but defect {de}")
    d1, d2 = c * (k - 1) + de, c * k
    mode = _mode(check, m.n)
    seed = _seed_list(seed)

    def attempt(sd):
        u1, r1, p1 = elementary_inflation(u, s, d1, Subspace.zero(u.field, u.ambient), sd + [1], mode)
        if cm is None:
            wp = Subspace.zero(u.field, u1.ambient)
        else:
            wp = random_generic_subspace(u1.span(cm), de, sd + [0])
        u2, r2, p2 = elementary_inflation(u1, s, d2, wp, sd + [2], mode)
        added = {str(e): [p1[e].rows.tolist(), p2[e].rows.tolist()] for e in bits(s)}
        return u2, r1, r2, sd, {"ambients": [u1.ambient, u2.ambient], "pieces": added}

    if mode == "off":
        accept = lambda v: True  # noqa: E731
    else:
        ts = _theorem_masks(m, s, mode, make_rng(seed + [1 << 20]))

        def accept(v):
            out = v[0]
            return (
                theorem_violation(u, out, m, s, ts) is None
                and defect(out, m, s) == 0
                and is_extension_arr(out, m)
            )

    (out, r1, r2, used, added), retries = sample_until(attempt, accept, seed, what=f"inflation of {bits(s)}")
    record = {
        "subset": bits(s),
        "labels": [m.labels[i] for i in bits(s)],
        "defect_before": de,
        "dims_added": [d1, d2],
        "seeds_used": used,
        "retries": [retries, r1, r2],
        "ambient_growth": out.ambient - u.ambient,
        "check": mode,
        "arrangement_hash": digest(out.to_json()),
        "added": added,
    }
    return out, record


def replay_step(u: Arrangement, record: dict) -> Arrangement:
    """Rebuild the output of one inflation step from its input and the pieces in its record."""
    try:
        added = record["added"]
        ambients = [int(x) for x in added["ambients"]]
        pieces = {int(e): rows for e, rows in added["pieces"].items()}
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise InputError(f"step record lacks its pieces: {exc}") from exc
    if len(ambients) != 2 or any(len(rows) != 2 for rows in pieces.values()):
        raise InputError("a step record holds exactly two elementary inflations")
    for e in pieces:
        if not 0 <= e < u.n:
            raise InputError(f"step record names element {e} outside the ground set")
    for k, amb in enumerate(ambients):
        if amb < u.ambient:
            raise InputError("ambient dimension may not shrink")
        u = u.pad(amb)
        piece = {e: Subspace.span_rows(u.field, amb, rows[k]) for e, rows in pieces.items()}
        u = u.replace({e: subspace_sum(u[e], piece[e]) for e in piece})
    return u


@dataclass(frozen=True)
class InflationTrace:
    seed: tuple[int, ...]
    steps: tuple[dict, ...]

    def to_json(self) -> dict:
        return {"seed": list(self.seed), "steps": list(self.steps)}

    @classmethod
    def from_json(cls, obj: dict) -> InflationTrace:
        return cls(tuple(obj["seed"]), tuple(obj["steps"]))


def full_alg_pipeline(
    a: Arrangement,
    m: TriangleMatroid,
    order: SubsetOrder,
    max_steps: int | None = None,
    seed=0,
    check: str = "auto",
    on_step: Callable[[int, int, Arrangement], None] | None = None,
) -> tuple[Arrangement, InflationTrace]:
    """Inflate along ``order`` (the empty set is skipped), stopping after ``max_steps``."""
    if not is_weak_rep(a, m):
        raise PreconditionViolation("pipeline input is not a weak representation")
    bad = order.violation()
    if bad:
        raise PreconditionViolation(bad)
    steps = [s for s in order.order if s]
    if max_steps is not None:
        steps = steps[:max_steps]
    root = _seed_list(seed)
    u = a
    records = []
    for i, s in enumerate(steps, start=1):
        u, rec = inflate(u, m, s, root + [i], check)
        rec["step"] = i
        records.append(rec)
        if on_step is not None:
            on_step(i, s, u)
    return u, InflationTrace(tuple(root), tuple(records))


# ---- compatibility with the combinatorial side ------------------------------


def claim1_violations(u: Arrangement, m: TriangleMatroid, g: Polymatroid) -> list[int]:
    """Masks B u T where dim U(B u T) != c g(B u T), over every T of non-basis elements."""
    nb = bits(m.nonbasis_mask)
    table = u.rank_table(base=u.span(m.basis_mask), elements=nb)
    masks = _expand(nb) | m.basis_mask
    bad = np.flatnonzero(table != u.c * g.table[masks])
    return [int(x) for x in masks[bad]]


def claim2_violations(u: Arrangement, m: TriangleMatroid, g: Polymatroid, subsets) -> list[int]:
    """Masks D u S_j where dim U(D u S_j) != c g(D u S_j), for D in B and the given S_j."""
    masks = np.array(sorted({d | int(s) for s in subsets for d in _basis_subsets(m)}), dtype=np.int64)
    if masks.size == 0:
        return []
    dims = u.dims_of(masks)
    bad = np.flatnonzero(dims != u.c * g.table[masks])
    return [int(x) for x in masks[bad]]


def contraction_violation_arr(u: Arrangement, m: TriangleMatroid) -> tuple[int, int] | None:
    """First (D, S) with dim U(D u S u C_M(S)) != dim U(S u B) - dim U_B + c r(D u S)."""
    t = u.rank_table()
    r = m.rank_table
    b = m.basis_mask
    idx = np.arange(1 << m.n, dtype=np.int64)
    cm = np.where(m.cm_table < 0, 0, m.cm_table)
    for d in _basis_subsets(m):
        bad = np.flatnonzero(t[idx | d | cm] != t[idx | b] - t[b] + u.c * r[idx | d])
        if bad.size:
            return d, int(bad[0])
    return None


def rank_poly(u: Arrangement, labels=()) -> Polymatroid:
    """The normalized rank function dim/c as an integer polymatroid."""
    t = u.rank_table()
    if (t % u.c).any():
        x = int(np.flatnonzero(t % u.c)[0])
        raise NotCAdmissible(f"dim U_X = {int(t[x])} for X = {bits(x)} is not a multiple of c = {u.c}")
    return Polymatroid(u.n, t // u.c, tuple(labels) or tuple(str(i) for i in range(u.n)))


# ---- doubling and well-separatedness ---------------------------------------


def double_arr(u: Arrangement) -> Arrangement:
    return Arrangement(u.field, 2 * u.ambient, 2 * u.c, tuple(direct_double(s) for s in u.subspaces))


def _separation_scan(u: Arrangement, m: TriangleMatroid, x: int, limit2: int) -> int | None:
    ax = subspace_intersect(u[x], u.span(m.basis_mask))
    plain = u.rank_table()
    with_ax = u.rank_table(base=ax)
    inter = ax.dim + plain - with_ax
    ok = (with_ax == plain) | (2 * inter <= limit2)
    bad = np.flatnonzero(~ok)
    return int(bad[0]) if bad.size else None


def well_separated_violation(u: Arrangement, m: TriangleMatroid, x: int) -> int | None:
    """A set T with A_x not inside U_T and dim(A_x cap U_T) > c/2, where A_x = U_x cap U_B."""
    if u.c % 2:
        raise OddC(f"c = {u.c} is odd; double the arrangement first")
    return _separation_scan(u, m, x, u.c)


def is_well_separated(u: Arrangement, m: TriangleMatroid, x: int) -> bool:
    return well_separated_violation(u, m, x) is None


def doubled_well_separated_violation(u: Arrangement, m: TriangleMatroid, x: int) -> int | None:
    """Same verdict as well_separated_violation(double_arr(u), m, x), computed on ``u``.

    Doubling doubles every dimension and c, so the threshold on U is c/2 with
    the intersection measured in U.
    """
    return _separation_scan(u, m, x, u.c)
