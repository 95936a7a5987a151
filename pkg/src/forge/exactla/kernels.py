"""Mod-p elimination kernels.

Every kernel has a numba implementation and a pure-numpy one with the same
signature.  ``FORGE_NUMBA=0`` in the environment forces the numpy path; the
numba path is used whenever numba imports and the flag is not set to 0.

All matrices are int64 with entries in [0, p).  The modulus must be below
2**31 so that a single product fits in int64 with room for accumulation.
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

MAX_MODULUS = 2**31


def _flag_enabled() -> bool:
    return os.environ.get("FORGE_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


USE_NUMBA = NUMBA_AVAILABLE and _flag_enabled()


def _budget(p: int) -> int:
    # number of un-reduced multiply-subtract updates an int64 entry survives
    return max(1, (2**62) // (p * p))


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------


def _np_insert(state, piv, rk, vecs, p):
    """Insert rows of ``vecs`` into the echelon ``state``; return the new rank."""
    n = state.shape[1]
    for v in vecs:
        if rk >= n:
            break
        v = v % p
        for r in range(rk):
            f = v[piv[r]]
            if f:
                v = (v - f * state[r]) % p
        nz = np.flatnonzero(v)
        if nz.size == 0:
            continue
        c = int(nz[0])
        inv = pow(int(v[c]), p - 2, p)
        state[rk] = (v * inv) % p
        piv[rk] = c
        rk += 1
    return rk


def _np_rank(m, p):
    n = m.shape[1]
    state = np.zeros((max(n, 1), n), dtype=np.int64)
    piv = np.zeros(max(n, 1), dtype=np.int64)
    return _np_insert(state, piv, 0, m, p)


def _np_rref(m, p):
    a = m.copy() % p
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        k = r + int(nz[0])
        if k != r:
            a[[r, k]] = a[[k, r]]
        inv = pow(int(a[r, c]), p - 2, p)
        a[r] = (a[r] * inv) % p
        col = a[:, c].copy()
        col[r] = 0
        nzr = np.flatnonzero(col)
        if nzr.size:
            a[nzr] = (a[nzr] - np.outer(col[nzr], a[r])) % p
        pivots.append(c)
        r += 1
    return a[:r].copy(), np.array(pivots, dtype=np.int64)


def _np_span_ranks(rows, offsets, masks, base, p):
    n = rows.shape[1]
    m = offsets.shape[0] - 1
    out = np.zeros(masks.shape[0], dtype=np.int64)
    state = np.zeros((max(n, 1), n), dtype=np.int64)
    piv = np.zeros(max(n, 1), dtype=np.int64)
    rk0 = _np_insert(state, piv, 0, base, p)
    saved = state[:rk0].copy()
    for i, mk in enumerate(masks):
        state[:rk0] = saved
        rk = rk0
        for e in range(m):
            if (int(mk) >> e) & 1:
                rk = _np_insert(state, piv, rk, rows[offsets[e]:offsets[e + 1]], p)
        out[i] = rk
    return out


def _np_rank_table(rows, offsets, base, p):
    n = rows.shape[1]
    m = offsets.shape[0] - 1
    table = np.zeros(1 << m, dtype=np.int64)
    width = max(n, 1)
    state = np.zeros((m + 1, width, n), dtype=np.int64)
    piv = np.zeros((m + 1, width), dtype=np.int64)
    rk = np.zeros(m + 1, dtype=np.int64)
    rk[0] = _np_insert(state[0], piv[0], 0, base, p)
    table[0] = rk[0]

    def rec(d, start, mask):
        for e in range(start, m):
            r0 = rk[d]
            state[d + 1, :r0] = state[d, :r0]
            piv[d + 1, :r0] = piv[d, :r0]
            if r0 < n:
                rk[d + 1] = _np_insert(state[d + 1], piv[d + 1], r0, rows[offsets[e]:offsets[e + 1]], p)
            else:
                rk[d + 1] = r0
            mk = mask | (1 << e)
            table[mk] = rk[d + 1]
            rec(d + 1, e + 1, mk)

    rec(0, 0, 0)
    return table


def _np_matmul(a, b, p):
    k = a.shape[1]
    if k == 0:
        return np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    if (p - 1) * (p - 1) * k < 2**63:
        return (a @ b) % p
    lo = b & 0xFFFF
    hi = b >> 16
    part_hi = ((a @ hi) % p) * 65536 % p
    return (part_hi + (a @ lo) % p) % p


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if NUMBA_AVAILABLE:

    @njit(cache=True)
    def _nb_powmod(a, e, p):
        result = 1
        a = a % p
        while e > 0:
            if e & 1:
                result = (result * a) % p
            a = (a * a) % p
            e >>= 1
        return result

    @njit(cache=True)
    def _nb_insert(state, piv, rk, vecs, p, budget):
        n = state.shape[1]
        v = np.empty(n, dtype=np.int64)
        for i in range(vecs.shape[0]):
            if rk >= n:
                break
            for j in range(n):
                v[j] = vecs[i, j]
            ops = 0
            for r in range(rk):
                c = piv[r]
                f = v[c] % p
                if f != 0:
                    for j in range(c, n):
                        v[j] -= f * state[r, j]
                    ops += 1
                    if ops >= budget:
                        for j in range(n):
                            v[j] %= p
                        ops = 0
            c = -1
            for j in range(n):
                v[j] %= p
                if c < 0 and v[j] != 0:
                    c = j
            if c < 0:
                continue
            inv = _nb_powmod(v[c], p - 2, p)
            for j in range(n):
                state[rk, j] = (v[j] * inv) % p
            piv[rk] = c
            rk += 1
        return rk

    @njit(cache=True)
    def _nb_rank(m, p, budget):
        n = m.shape[1]
        w = max(n, 1)
        state = np.zeros((w, n), dtype=np.int64)
        piv = np.zeros(w, dtype=np.int64)
        return _nb_insert(state, piv, 0, m, p, budget)

    @njit(cache=True)
    def _nb_rref(m, p, budget):
        rows, cols = m.shape
        w = max(min(rows, cols), 1)
        state = np.zeros((w, cols), dtype=np.int64)
        piv = np.zeros(w, dtype=np.int64)
        rk = 0
        v = np.empty(cols, dtype=np.int64)
        for i in range(rows):
            if rk >= w or rk >= cols:
                break
            sub = m[i:i + 1]
            rk = _nb_insert(state, piv, rk, sub, p, budget)
        # sort by pivot column, then back-substitute
        order = np.argsort(piv[:rk])
        out = np.zeros((rk, cols), dtype=np.int64)
        pv = np.zeros(rk, dtype=np.int64)
        for a in range(rk):
            out[a] = state[order[a]]
            pv[a] = piv[order[a]]
        for a in range(rk - 1, -1, -1):
            c = pv[a]
            for b in range(a):
                f = out[b, c]
                if f != 0:
                    for j in range(c, cols):
                        v[j] = out[b, j] - f * out[a, j]
                    for j in range(c, cols):
                        out[b, j] = v[j] % p
        return out, pv

    @njit(cache=True)
    def _nb_span_ranks(rows, offsets, masks, base, p, budget):
        n = rows.shape[1]
        m = offsets.shape[0] - 1
        w = max(n, 1)
        out = np.zeros(masks.shape[0], dtype=np.int64)
        state = np.zeros((w, n), dtype=np.int64)
        piv = np.zeros(w, dtype=np.int64)
        rk0 = _nb_insert(state, piv, 0, base, p, budget)
        saved = state[:rk0].copy()
        saved_piv = piv[:rk0].copy()
        for i in range(masks.shape[0]):
            state[:rk0] = saved
            piv[:rk0] = saved_piv
            rk = rk0
            mk = masks[i]
            for e in range(m):
                if (mk >> e) & 1:
                    if rk < n:
                        rk = _nb_insert(state, piv, rk, rows[offsets[e]:offsets[e + 1]], p, budget)
            out[i] = rk
        return out

    @njit(cache=True)
    def _nb_rank_table(rows, offsets, base, p, budget):
        n = rows.shape[1]
        m = offsets.shape[0] - 1
        w = max(n, 1)
        table = np.zeros(1 << m, dtype=np.int64)
        state = np.zeros((m + 1, w, n), dtype=np.int64)
        piv = np.zeros((m + 1, w), dtype=np.int64)
        rk = np.zeros(m + 1, dtype=np.int64)
        nxt = np.zeros(m + 1, dtype=np.int64)
        masks = np.zeros(m + 1, dtype=np.int64)
        rk[0] = _nb_insert(state[0], piv[0], 0, base, p, budget)
        table[0] = rk[0]
        d = 0
        while d >= 0:
            e = nxt[d]
            if e >= m:
                d -= 1
                continue
            nxt[d] = e + 1
            r0 = rk[d]
            for a in range(r0):
                piv[d + 1, a] = piv[d, a]
                for j in range(n):
                    state[d + 1, a, j] = state[d, a, j]
            if r0 < n:
                rk[d + 1] = _nb_insert(state[d + 1], piv[d + 1], r0, rows[offsets[e]:offsets[e + 1]], p, budget)
            else:
                rk[d + 1] = r0
            mk = masks[d] | (1 << e)
            table[mk] = rk[d + 1]
            masks[d + 1] = mk
            nxt[d + 1] = e + 1
            d += 1
        return table


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _as_i64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.int64)


def _check_p(p: int) -> None:
    if not 2 <= p < MAX_MODULUS:
        raise ValueError(f"modulus {p} outside [2, 2**31)")


def rank(m: np.ndarray, p: int, use_numba: bool | None = None) -> int:
    """Rank of an integer matrix over GF(p)."""
    _check_p(p)
    m = _as_i64(m) % p
    if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
        return 0
    if USE_NUMBA if use_numba is None else use_numba:
        return int(_nb_rank(m, p, _budget(p)))
    return int(_np_rank(m, p))


def rref(m: np.ndarray, p: int, use_numba: bool | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Reduced row echelon form with zero rows dropped, plus pivot columns."""
    _check_p(p)
    m = _as_i64(m) % p
    if m.shape[0] == 0 or m.shape[1] == 0:
        return np.zeros((0, m.shape[1]), dtype=np.int64), np.zeros(0, dtype=np.int64)
    if USE_NUMBA if use_numba is None else use_numba:
        out, pv = _nb_rref(m, p, _budget(p))
        return out, pv
    return _np_rref(m, p)


def matmul(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """Matrix product mod p without int64 overflow."""
    _check_p(p)
    return _np_matmul(_as_i64(a) % p, _as_i64(b) % p, p)


def _pack(blocks: list[np.ndarray], n: int) -> tuple[np.ndarray, np.ndarray]:
    offsets = np.zeros(len(blocks) + 1, dtype=np.int64)
    for i, b in enumerate(blocks):
        offsets[i + 1] = offsets[i] + b.shape[0]
    rows = np.zeros((int(offsets[-1]), n), dtype=np.int64)
    for i, b in enumerate(blocks):
        if b.shape[0]:
            rows[offsets[i]:offsets[i + 1]] = b
    return rows, offsets


def span_ranks(
    blocks: list[np.ndarray],
    masks,
    p: int,
    n: int,
    base: np.ndarray | None = None,
    use_numba: bool | None = None,
) -> np.ndarray:
    """Dimension of ``base + sum(blocks[e] for e in mask)`` for each mask.

    ``blocks`` are row-basis matrices with ``n`` columns.
    """
    _check_p(p)
    rows, offsets = _pack([_as_i64(b) for b in blocks], n)
    base = np.zeros((0, n), dtype=np.int64) if base is None else _as_i64(base)
    masks = np.asarray(masks, dtype=np.int64).reshape(-1)
    if USE_NUMBA if use_numba is None else use_numba:
        return _nb_span_ranks(rows, offsets, masks, base, p, _budget(p))
    return _np_span_ranks(rows, offsets, masks, base, p)


def rank_table(
    blocks: list[np.ndarray],
    p: int,
    n: int,
    base: np.ndarray | None = None,
    use_numba: bool | None = None,
) -> np.ndarray:
    """Dimensions of all 2**len(blocks) subset sums, indexed by bitmask."""
    _check_p(p)
    rows, offsets = _pack([_as_i64(b) for b in blocks], n)
    base = np.zeros((0, n), dtype=np.int64) if base is None else _as_i64(base)
    if USE_NUMBA if use_numba is None else use_numba:
        return _nb_rank_table(rows, offsets, base, p, _budget(p))
    return _np_rank_table(rows, offsets, base, p)
