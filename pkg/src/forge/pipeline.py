"""End-to-end reduction, witness-driven certificates and their verification."""
from __future__ import annotations

import re

import numpy as np

import forge
from forge.arrangement import Arrangement
from forge.dowling import build_dowling, build_weak_rep, extract_group, is_weak_rep, witness_rank
from forge.errors import ForgeError, InputError, NotAWitness, NotDeskScale
from forge.exactla import PrimeField, default_prime
from forge.expansion import CBasis, is_expansion, separates, separating_basis
from forge.fixtures import toy_ids
from forge.groups import (
    FiniteGroup,
    Homomorphism,
    NormalizedPresentation,
    Presentation,
    lift_images,
    normalize,
    validate_group,
    validate_hom,
    validate_source_hom,
)
from forge.inflation import (
    _expand,
    claim1_violations,
    claim2_violations,
    defect,
    double_arr,
    doubled_well_separated_violation,
    extension_violation,
    full_alg_pipeline,
    intersect_to_weak,
    is_well_separated,
    rank_poly,
    replay_step,
    theorem_violation,
)
from forge.io import HASH_NAME, digest
from forge.matroids import (
    Polymatroid,
    SubsetOrder,
    TriangleMatroid,
    bits,
    build_subset_order,
    double_poly,
    full_comb_pipeline,
    is_extension_poly,
    restrict,
    validate_polymatroid,
)

SCHEMA = 1
# the combinatorial pipeline is run to completion when steps * 2^n stays below this
COMB_BUDGET = 1 << 26
TOY_X, TOY_Y = 3, 4

_TOKEN = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(\^-1)?$")


# ---- sealed JSON documents ---------------------------------------------------------


def seal(kind: str, body: dict) -> dict:
    return {"kind": kind, "hash_name": HASH_NAME, "hash": digest(body), "body": body}


def unseal(obj, kind: str) -> tuple[dict, bool]:
    """The body of a sealed document and whether its hash matches."""
    if not isinstance(obj, dict) or obj.get("kind") != kind or not isinstance(obj.get("body"), dict):
        raise InputError(f"not a {kind} document")
    if obj.get("hash_name") != HASH_NAME:
        raise InputError(f"unsupported hash {obj.get('hash_name')!r}")
    return obj["body"], obj.get("hash") == digest(obj["body"])


def parse_word(text: str) -> tuple:
    """Letters separated by spaces or '*'; a trailing ^-1 inverts a letter."""
    out = []
    for tok in re.split(r"[\s*]+", text.strip()):
        if not tok:
            continue
        m = _TOKEN.match(tok)
        if not m:
            raise InputError(f"bad letter {tok!r} in word {text!r}")
        out.append((m[1], -1 if m[2] else 1))
    return tuple(out)


def parse_scale(scale: str) -> tuple[str, int | None]:
    if scale == "toy":
        return "toy", None
    if scale == "full":
        raise NotDeskScale("full-scale inflation of the Dowling matroid is not desk feasible; use toy or truncated:N")
    m = re.fullmatch(r"truncated:(\d+)", scale)
    if not m:
        raise InputError(f"scale must be toy, truncated:N or full, not {scale!r}")
    return "truncated", int(m[1])


# ---- reduce ------------------------------------------------------------------------


def cmd_reduce(pres: Presentation, word: tuple | None = None) -> dict:
    """Normalize, build the Dowling matroid, and run the combinatorial pipeline when affordable."""
    if word is not None:
        pres = Presentation(pres.generators, pres.relators, word)
    normal = normalize(pres)
    m = build_dowling(normal)
    order = build_subset_order(m)
    steps = len(order) - 1
    body = {
        "schema": SCHEMA,
        "forge_version": forge.__version__,
        "presentation": pres.to_json(),
        "normalized": normal.to_json(),
        "matroid": m.to_json(),
        "order": list(order.order),
        "target": {"x": m.id_of(f"{normal.word}^(1)"), "y": m.id_of("e^(1)"), "labels": [f"{normal.word}^(1)", "e^(1)"]},
    }
    if steps * (1 << m.n) <= COMB_BUDGET:
        g = full_comb_pipeline(m, order, check=False)[-1]
        validate_polymatroid(g)
        if not is_extension_poly(g, m):
            raise ForgeError("combinatorial pipeline output does not extend the matroid")
        body["combinatorial"] = {"complete": True, "steps": steps, "g": g.to_json(), "g2": double_poly(g).to_json()}
    else:
        body["combinatorial"] = {
            "complete": False,
            "steps": steps,
            "reason": f"{steps} steps over 2^{m.n} subsets exceed the desk budget",
        }
    return seal("reduction", body)


# ---- certify -----------------------------------------------------------------------


def _reduction_parts(red: dict) -> tuple[dict, NormalizedPresentation, TriangleMatroid, SubsetOrder]:
    body, ok = unseal(red, "reduction")
    if not ok:
        raise InputError("reduction hash does not match its contents")
    try:
        normal = NormalizedPresentation.from_json(body["normalized"])
        m = TriangleMatroid.from_json(body["matroid"])
        order = SubsetOrder(tuple(body["order"]))
    except (KeyError, TypeError) as exc:
        raise InputError(f"bad reduction: {exc}") from exc
    if order.violation() is not None or order != build_subset_order(m):
        raise InputError("reduction carries a subset order other than the canonical one")
    return body, normal, m, order


def _witness(normal: NormalizedPresentation, group: FiniteGroup, images: dict) -> Homomorphism:
    validate_group(group)
    lifted = lift_images(normal, group, images)
    if not all(x in images for x in normal.generators):
        validate_source_hom(normal.source, group, {str(k): int(v) for k, v in images.items()})
    h = Homomorphism(normal, group, lifted)
    validate_hom(h)
    return h


def _toy_section(m: TriangleMatroid, a: Arrangement, word: str, seed: list[int]) -> dict:
    ids = toy_ids(m, word)
    tm, ta = restrict(m, ids), a.restrict(ids)
    u, trace = full_alg_pipeline(ta, tm, build_subset_order(tm), seed=seed + [2], check="full")
    w = double_arr(u)
    cb = separating_basis(w, tm, TOY_X, seed + [3])
    return {"ids": ids, "trace": trace.to_json(), "double": w.to_json(), "cbasis": cb.to_json()}


def cmd_certify(red: dict, group: FiniteGroup, images: dict, scale: str, seed: int = 0) -> dict:
    """Certificate for the witness (group, images) at the requested scale."""
    kind, steps = parse_scale(scale)
    rbody, normal, m, order = _reduction_parts(red)
    h = _witness(normal, group, images)
    field = PrimeField(default_prime())
    a = build_weak_rep(m, group, h, field)
    wr = witness_rank(a, m, normal.word)
    if not wr.is_witness:
        raise NotAWitness(f"witness rank {wr} is not above 1: the word maps to the identity")
    root = [int(seed)]
    body = {
        "schema": SCHEMA,
        "forge_version": forge.__version__,
        "reduction_hash": red["hash"],
        "reduction": red,
        "scale": scale,
        "seed": int(seed),
        "field_p": field.p,
        "witness": {"group": group.to_json(), "images": {str(k): int(v) for k, v in images.items()}, "lifted": h.images},
        "weak_rep": a.to_json(),
        "witness_rank": wr.to_json(),
    }
    if kind == "truncated":
        _, trace = full_alg_pipeline(a, m, order, max_steps=steps, seed=root + [1], check="sample")
        body["truncated"] = {"steps": steps, "trace": trace.to_json()}
    body["toy"] = _toy_section(m, a, normal.word, root)
    body["claims"] = evaluate_claims(body)
    body["sections"] = section_digests(body)
    return seal("certificate", body)


def section_digests(body: dict) -> dict:
    """Digest of every top-level dump, with trace steps hashed one by one."""
    out = {}
    for key, val in body.items():
        if key != "sections":
            out[key] = digest(val)
    for key in ("truncated", "toy"):
        sec = body.get(key)
        if isinstance(sec, dict) and isinstance(sec.get("trace"), dict):
            for i, step in enumerate(sec["trace"].get("steps", []), start=1):
                out[f"{key}.steps[{i}]"] = digest(step)
    return out


# ---- claims ------------------------------------------------------------------------


class _Claims:
    def __init__(self) -> None:
        self.out: list[dict] = []

    def check(self, cid: str, fn, kind: str = "claim") -> bool:
        detail = None
        try:
            holds = bool(fn())
        except Exception as exc:  # a malformed dump counts against the claim, not the verifier
            holds, detail = False, f"{type(exc).__name__}: {exc}"
        entry = {"id": cid, "kind": kind, "holds": holds}
        if detail:
            entry["detail"] = detail
        self.out.append(entry)
        return holds

    def fail_all(self, cids, reason: str) -> None:
        for cid in cids:
            self.out.append({"id": cid, "kind": "claim", "holds": False, "detail": reason})


STEP_CLAIMS = ("record", "hash", "theorem", "full", "extension", "claim1", "claim2", "intersection")


def _disjoint_sets(m: TriangleMatroid, s: int) -> np.ndarray:
    return _expand([i for i in range(m.n) if not s >> i & 1])


def _record_ok(rec: dict, before: Arrangement, m: TriangleMatroid, s: int, i: int) -> bool:
    c, k = before.c, len(bits(s))
    de = defect(before, m, s)
    return (
        rec["step"] == i
        and rec["subset"] == bits(s)
        and rec["defect_before"] == de
        and rec["dims_added"] == [c * (k - 1) + de, c * k]
        and rec["ambient_growth"] == c * (2 * k - 1)
    )


def _check_trace(cl: _Claims, prefix: str, a: Arrangement, m: TriangleMatroid, order: SubsetOrder, trace, steps: int) -> Arrangement | None:
    """Replay the trace step by step and recheck every per-step statement exhaustively."""
    subsets = [s for s in order.order if s][:steps]
    gs = full_comb_pipeline(m, order, max_steps=steps, check=False)
    if not isinstance(trace, dict) or not isinstance(trace.get("steps"), list) or len(trace["steps"]) != len(subsets):
        cl.fail_all([f"{prefix}.trace"], "trace is missing or has the wrong number of steps")
        return None
    u = a
    for i, (s, rec) in enumerate(zip(subsets, trace["steps"]), start=1):
        p = f"{prefix}.steps[{i}]"
        before = u
        try:
            u = replay_step(before, rec)
        except Exception as exc:
            cl.fail_all([f"{p}.{n}" for n in STEP_CLAIMS], f"cannot replay: {exc}")
            return None
        cl.check(f"{p}.record", lambda: _record_ok(rec, before, m, s, i))
        cl.check(f"{p}.hash", lambda: rec["arrangement_hash"] == digest(u.to_json()))
        cl.check(f"{p}.theorem", lambda: theorem_violation(before, u, m, s, _disjoint_sets(m, s)) is None)
        cl.check(f"{p}.full", lambda: defect(u, m, s) == 0)
        cl.check(f"{p}.extension", lambda: extension_violation(u, m) is None)
        cl.check(f"{p}.claim1", lambda: claim1_violations(u, m, gs[i]) == [])
        cl.check(f"{p}.claim2", lambda: claim2_violations(u, m, gs[i], subsets[:i]) == [])

        def recovered():
            w = intersect_to_weak(u, m.basis)
            return is_weak_rep(w, m) and w == a.pad(u.ambient)

        cl.check(f"{p}.intersection", recovered)
    return u


def _toy_claims(cl: _Claims, toy: dict, m: TriangleMatroid, a: Arrangement) -> None:
    ids = toy["ids"]
    if not isinstance(ids, list) or len(ids) != 5 or ids[:3] != list(m.basis):
        cl.fail_all(["toy.restriction"], "toy ids must be the basis followed by two bottom elements")
        return
    tm, ta = restrict(m, ids), a.restrict(ids)
    cl.check("toy.restriction", lambda: is_weak_rep(ta, tm) and tm.elements[TOY_Y].kind == "identity")
    order = build_subset_order(tm)
    u = _check_trace(cl, "toy", ta, tm, order, toy["trace"], len(order) - 1)
    if u is None:
        return
    g = rank_poly(u, tm.labels) if not (u.rank_table() % u.c).any() else None
    cl.check("toy.final_rank", lambda: g is not None and g == full_comb_pipeline(tm, order, check=False)[-1])
    w = Arrangement.from_json(toy["double"])
    cl.check("toy.double", lambda: w == double_arr(u))
    cl.check("toy.well_separated", lambda: is_well_separated(w, tm, TOY_X))
    cb = CBasis.from_json(toy["cbasis"], w)
    cl.check("toy.cbasis", lambda: cb.violation() is None and cb.c * 2 == w.c)
    n = cb.combinatorial_type()
    cl.check("toy.expansion", lambda: is_expansion(n, double_poly(g)))
    cl.check("toy.separates", lambda: separates(n, TOY_X, TOY_Y, g))

    def distinct():
        back = intersect_to_weak(cb.reconstruct(), tm.basis)
        return back[TOY_X] != back[TOY_Y]

    cl.check("toy.distinct", distinct)


def evaluate_claims(body: dict) -> list[dict]:
    """Recompute every claim from the dumps in a certificate body."""
    cl = _Claims()
    rbody, normal, m, order = _reduction_parts(body["reduction"])
    comb = rbody.get("combinatorial", {})
    if comb.get("complete"):
        cl.check(
            "reduction.g",
            lambda: Polymatroid.from_json(comb["g"]) == full_comb_pipeline(m, order, check=False)[-1]
            and Polymatroid.from_json(comb["g2"]) == double_poly(Polymatroid.from_json(comb["g"])),
        )
    wit = body["witness"]
    state = {}

    def witness_ok():
        group = FiniteGroup.from_json(wit["group"])
        h = _witness(normal, group, wit["images"])
        state["h"] = h
        return h.images == {k: int(v) for k, v in wit["lifted"].items()}

    cl.check("witness.hom", witness_ok)
    a = Arrangement.from_json(body["weak_rep"])
    cl.check("weak_rep.field", lambda: a.p == int(body["field_p"]))
    cl.check("weak_rep.rebuilt", lambda: a == build_weak_rep(m, state["h"].target, state["h"], a.field))
    cl.check("weak_rep.exhaustive", lambda: is_weak_rep(a, m))

    def rank_ok():
        wr = witness_rank(a, m, normal.word)
        return wr.is_witness and wr.to_json() == body["witness_rank"]

    cl.check("witness_rank", rank_ok)

    def extraction():
        _, audit = extract_group(a, m)
        rel = audit["relators"]
        return (
            audit["sides_consistent"]
            and audit["inverses_consistent"]
            and all(r["block_rank"] == r["expected"] and r["product_is_identity"] for r in rel)
        )

    cl.check("extraction.audit", extraction)
    kind, steps = parse_scale(body["scale"])
    if kind == "truncated":
        tr = body["truncated"]
        if int(tr["steps"]) != steps:
            cl.fail_all(["truncated.steps"], "recorded step count differs from the scale")
        u = _check_trace(cl, "truncated", a, m, order, tr["trace"], steps)
        if u is not None:
            # well separation is only asserted after complete inflation; a prefix is recorded as measured
            cl.check("truncated.well_separated", lambda: doubled_well_separated_violation(u, m, body["reduction"]["body"]["target"]["x"]) is None, kind="observation")
    _toy_claims(cl, body["toy"], m, a)
    return cl.out


# ---- verify ------------------------------------------------------------------------


def cmd_verify(cert, deep: bool = False) -> dict:
    """Re-derive every claim of a certificate; the report lists each one.

    Integrity comes first: altered dumps are reported by section and, unless
    ``deep`` is set, the claims are not recomputed.
    """
    try:
        body, intact = unseal(cert, "certificate")
        red = body["reduction"]
        _, red_intact = unseal(red, "reduction")
        bound = red_intact and body.get("reduction_hash") == red.get("hash")
    except (InputError, KeyError, TypeError) as exc:
        return {"status": "rejected", "reason": f"unreadable certificate: {exc}", "failed": ["format"], "claims": []}
    if not bound:
        return {"status": "rejected", "reason": "reduction hash does not match the embedded reduction", "failed": ["reduction"], "claims": []}
    recorded = body.get("sections") if isinstance(body.get("sections"), dict) else {}
    now = section_digests(body)
    altered = sorted(k for k in set(now) | set(recorded) if now.get(k) != recorded.get(k))
    if not intact and not altered:
        altered = ["sections"]
    rows = [{"id": f"integrity.{k}", "kind": "claim", "claimed": True, "recomputed": False, "pass": False} for k in altered]
    if not intact or altered:
        if not deep:
            return {
                "status": "fail",
                "reason": "certificate contents do not match their hashes; claims were not recomputed",
                "scale": body.get("scale"),
                "passed": 0,
                "failed": [r["id"] for r in rows],
                "claims": rows,
            }
    else:
        rows.append({"id": "integrity", "kind": "claim", "claimed": True, "recomputed": True, "pass": True})
    try:
        recomputed = evaluate_claims(body)
    except Exception as exc:  # a broken body is a failed verification, not a crash
        recomputed = [{"id": "certificate.body", "kind": "claim", "holds": False, "detail": f"{type(exc).__name__}: {exc}"}]
    claimed = {}
    raw = body.get("claims")
    if isinstance(raw, list):
        for c in raw:
            if isinstance(c, dict) and "id" in c:
                claimed[str(c["id"])] = c
    seen = set()
    for r in recomputed:
        cid = r["id"]
        seen.add(cid)
        rec = claimed.get(cid)
        was = rec.get("holds") if rec else None
        ok = was == r["holds"] and (r["kind"] == "observation" or r["holds"] is True)
        if rec and rec.get("kind") != r["kind"]:
            ok = False
        row = {"id": cid, "kind": r["kind"], "claimed": was, "recomputed": r["holds"], "pass": ok}
        if "detail" in r:
            row["detail"] = r["detail"]
        rows.append(row)
    for cid in sorted(set(claimed) - seen):
        rows.append({"id": cid, "kind": "claim", "claimed": claimed[cid].get("holds"), "recomputed": None, "pass": False})
    failed = [r["id"] for r in rows if not r["pass"]]
    return {
        "status": "pass" if not failed else "fail",
        "scale": body.get("scale"),
        "passed": len(rows) - len(failed),
        "failed": failed,
        "claims": rows,
    }


def reseal(cert: dict) -> dict:
    """Recompute every digest of a certificate, as a forger would after editing its dumps."""
    body = dict(cert["body"])
    body["sections"] = section_digests(body)
    return seal("certificate", body)
