from __future__ import annotations

import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from forge.dowling import is_weak_rep  # noqa: E402
from forge.fixtures import cube_weak_rep, toy_arrangement, toy_matroid  # noqa: E402
from forge.groups import Presentation, cyclic  # noqa: E402
from forge.inflation import (  # noqa: E402
    _expand,
    claim1_violations,
    claim2_violations,
    defect,
    extension_violation,
    full_alg_pipeline,
    intersect_to_weak,
    theorem_violation,
)
from forge.matroids import build_subset_order, full_comb_pipeline  # noqa: E402
from forge.pipeline import cmd_certify, cmd_reduce, cmd_verify  # noqa: E402

TRUNCATED_STEPS = 30


def lockstep(m, a, steps, seed, check, theorem_sets):
    """Run both pipelines on the same order and record every per-step check.

    ``theorem_sets(s)`` gives the sets T (disjoint from s) on which the rank
    formula is re-verified independently of the checks inside inflate.
    """
    order = build_subset_order(m)
    gs = full_comb_pipeline(m, order, max_steps=steps)
    prev = {"u": a}
    rows = []
    start = time.time()

    def on_step(i, s, u):
        before = prev["u"]
        w = intersect_to_weak(u, m.basis)
        rows.append(
            {
                "step": i,
                "subset": s,
                "theorem": theorem_violation(before, u, m, s, theorem_sets(s)),
                "full_after": defect(u, m, s) == 0,
                "extension": extension_violation(u, m),
                "claim1": claim1_violations(u, m, gs[i]),
                "claim2": claim2_violations(u, m, gs[i], order.order[1 : i + 1]),
                "weak": is_weak_rep(w, m),
                "recovered": w == a.pad(u.ambient),
                "basis_fixed": all(u[b] == a[b].pad(u.ambient) for b in m.basis),
            }
        )
        prev["u"] = u

    u, trace = full_alg_pipeline(a, m, order, max_steps=steps, seed=seed, check=check, on_step=on_step)
    return {"final": u, "trace": trace, "rows": rows, "g": gs, "order": order, "seconds": time.time() - start}


def _all_disjoint(m):
    def sets(s):
        return _expand([i for i in range(m.n) if not s >> i & 1])

    return sets


@pytest.fixture(scope="session")
def toy_run():
    m = toy_matroid()
    a = toy_arrangement(variant="swap")
    return m, a, lockstep(m, a, None, 11, "full", _all_disjoint(m))


@pytest.fixture(scope="session")
def cube_run():
    m, a = cube_weak_rep()
    return m, a, lockstep(m, a, TRUNCATED_STEPS, 7, "sample", _all_disjoint(m))


X = ("x", 1)
CUBE_PRES = Presentation(("x",), ((X, X, X),), (X,))


@pytest.fixture(scope="session")
def cube_reduction():
    return cmd_reduce(CUBE_PRES)


@pytest.fixture(scope="session")
def toy_cert(cube_reduction):
    return cmd_certify(cube_reduction, cyclic(3), {"x": 1}, "toy", seed=7)


@pytest.fixture(scope="session")
def truncated_cert(cube_reduction):
    """Certificate and deep verification report for the 30-step prefix."""
    start = time.time()
    cert = cmd_certify(cube_reduction, cyclic(3), {"x": 1}, f"truncated:{TRUNCATED_STEPS}", seed=7)
    mid = time.time()
    report = cmd_verify(cert)
    return {"cert": cert, "report": report, "certify_seconds": mid - start, "verify_seconds": time.time() - mid}


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
