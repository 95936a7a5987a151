"""Time the numba kernels against the numpy fallback.

Each kernel is called with both paths on the same inputs; the outputs must
agree before a timing is reported.  ``--end-to-end`` also times a toy
certificate in two subprocesses, one with FORGE_NUMBA=0.

    python3 benchmarks/bench_kernels.py --repeat 5 --end-to-end
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from forge.exactla import kernels
from forge.fixtures import cube_weak_rep

P = 1_000_003


def best_of(fn, repeat: int) -> tuple[float, object]:
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(rng: np.random.Generator):
    for n in (16, 64, 160):
        # rank n/2: the lower rows are small combinations of the upper ones
        top = rng.integers(0, P, (n // 2, n))
        m = np.vstack([top, rng.integers(0, 3, (n - n // 2, n // 2)) @ top % P])
        yield f"rank {n}x{n}", lambda use, m=m: kernels.rank(m, P, use_numba=use)
        yield f"rref {n}x{n}", lambda use, m=m: kernels.rref(m, P, use_numba=use)[0]

    _, a = cube_weak_rep()
    blocks = [s.rows for s in a.subspaces]
    yield "rank_table cube 2^12", lambda use: kernels.rank_table(blocks, a.p, a.ambient, use_numba=use)
    masks = rng.integers(0, 1 << len(blocks), 2000)
    yield "span_ranks cube 2000 masks", lambda use: kernels.span_ranks(blocks, masks, a.p, a.ambient, use_numba=use)


def end_to_end() -> None:
    script = (
        "from forge.groups import Presentation, cyclic\n"
        "from forge.pipeline import cmd_certify, cmd_reduce\n"
        "x = ('x', 1)\n"
        "red = cmd_reduce(Presentation(('x',), ((x, x, x),), (x,)))\n"
        "cmd_certify(red, cyclic(3), {'x': 1}, 'toy', seed=7)\n"
    )
    for flag in ("1", "0"):
        env = dict(os.environ, FORGE_NUMBA=flag)
        t0 = time.perf_counter()
        subprocess.run([sys.executable, "-c", script], env=env, check=True)
        print(f"{'toy certify (FORGE_NUMBA=' + flag + ')':<32}{time.perf_counter() - t0:>10.2f}s  (includes import and jit)")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--end-to-end", action="store_true")
    args = parser.parse_args(argv)
    if not kernels.NUMBA_AVAILABLE:
        print("numba is not importable; only the numpy path can run")
        return 1

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<32}{'numba':>10}{'numpy':>10}{'speedup':>10}")
    for name, fn in cases(rng):
        fn(True)  # compile outside the timing
        t_nb, out_nb = best_of(lambda: fn(True), args.repeat)
        t_np, out_np = best_of(lambda: fn(False), args.repeat)
        if not np.array_equal(np.asarray(out_nb), np.asarray(out_np)):
            print(f"{name}: numba and numpy results differ")
            return 1
        print(f"{name:<32}{t_nb * 1e3:>8.2f}ms{t_np * 1e3:>8.2f}ms{t_np / max(t_nb, 1e-9):>9.1f}x")
    if args.end_to_end:
        end_to_end()
    return 0


if __name__ == "__main__":
    sys.exit(main())
