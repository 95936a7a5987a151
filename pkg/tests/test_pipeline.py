from __future__ import annotations

import copy
import random

import pytest

from forge.errors import GroundSetTooLarge, InputError, NotAHomomorphism, NotAWitness, NotDeskScale
from forge.groups import Presentation, cyclic, symmetric
from forge.matroids import Polymatroid, TriangleMatroid, is_extension_poly, validate_polymatroid
from forge.pipeline import cmd_certify, cmd_reduce, cmd_verify, parse_scale, parse_word, reseal, seal

from conftest import CUBE_PRES, TRUNCATED_STEPS, X


def leaves(obj, path=()):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from leaves(v, path + (k,))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from leaves(v, path + (i,))
    else:
        yield path


def get_at(obj, path):
    for k in path:
        obj = obj[k]
    return obj


def set_at(obj, path, value):
    for k in path[:-1]:
        obj = obj[k]
    obj[path[-1]] = value


def mutated(value):
    if isinstance(value, bool):
        return not value
    if isinstance(value, int):
        return value + 1
    if isinstance(value, float):
        return value + 0.5
    if isinstance(value, str):
        return value + "_"
    return 0


def mutate(cert, path):
    out = copy.deepcopy(cert)
    set_at(out, path, mutated(get_at(out, path)))
    return out


def forge_body(cert, edit):
    """Edit the body and recompute every hash, so only the recomputation can catch it."""
    out = copy.deepcopy(cert)
    edit(out["body"])
    return reseal(out)


def first_nonzero_entry(sub):
    return next(i for i, v in enumerate(sub["entries"]) if v)


# ---- argument parsing --------------------------------------------------------------


def test_parse_word():
    assert parse_word("x y^-1 * z") == (("x", 1), ("y", -1), ("z", 1))
    assert parse_word("x*x") == (("x", 1), ("x", 1))


@pytest.mark.parametrize("bad", ["x^2", "1x", "x^-"])
def test_parse_word_rejects(bad):
    with pytest.raises(InputError):
        parse_word(bad)


def test_parse_scale():
    assert parse_scale("toy") == ("toy", None)
    assert parse_scale("truncated:30") == ("truncated", 30)
    with pytest.raises(NotDeskScale):
        parse_scale("full")
    with pytest.raises(InputError):
        parse_scale("truncated")


# ---- reduce -----------------------------------------------------------------


def test_reduce_cube(cube_reduction):
    body = cube_reduction["body"]
    m = TriangleMatroid.from_json(body["matroid"])
    assert m.n == 12
    comb = body["combinatorial"]
    assert comb["complete"] and comb["steps"] == len(body["order"]) - 1
    g = Polymatroid.from_json(comb["g"])
    assert len(g.table) == 4096
    validate_polymatroid(g)
    assert is_extension_poly(g, m)
    g2 = Polymatroid.from_json(comb["g2"])
    assert (g2.table == 2 * g.table).all()
    assert body["target"]["labels"] == ["x^(1)", "e^(1)"]
    assert body["target"]["x"] == m.id_of("x^(1)")


def test_reduce_deterministic(cube_reduction):
    assert cmd_reduce(CUBE_PRES) == cube_reduction


def test_reduce_word_override():
    red = cmd_reduce(CUBE_PRES, parse_word("x x"))
    normal = red["body"]["normalized"]
    assert normal["word"] in normal["generators"]
    assert red["body"]["target"]["labels"][0] == f"{normal['word']}^(1)"


def test_reduce_long_relator_skips_combinatorial():
    red = cmd_reduce(Presentation(("x",), ((X,) * 5,), (X,)))
    body = red["body"]
    assert len(body["matroid"]["elements"]) == 6 + 6 * len(body["normalized"]["generators"]) == 24
    assert body["combinatorial"]["complete"] is False
    assert "budget" in body["combinatorial"]["reason"]


def test_reduce_ground_cap():
    gens = ("x", "y", "z", "t")
    with pytest.raises(GroundSetTooLarge):
        cmd_reduce(Presentation(gens, (tuple((g, 1) for g in gens),), (X,)))


# ---- certify ----------------------------------------------------------------


def test_certify_trivial_hom_is_not_a_witness(cube_reduction):
    with pytest.raises(NotAWitness):
        cmd_certify(cube_reduction, cyclic(3), {"x": 0}, "toy")


def test_certify_full_scale_refused(cube_reduction):
    with pytest.raises(NotDeskScale):
        cmd_certify(cube_reduction, cyclic(3), {"x": 1}, "full")


def test_certify_rejects_non_hom(cube_reduction):
    with pytest.raises(NotAHomomorphism):
        cmd_certify(cube_reduction, symmetric(3), {"x": 1}, "toy")


def test_certify_rejects_tampered_reduction(cube_reduction):
    bad = copy.deepcopy(cube_reduction)
    bad["body"]["order"] = bad["body"]["order"][::-1]
    with pytest.raises(InputError):
        cmd_certify(bad, cyclic(3), {"x": 1}, "toy")
    # even with a fresh hash the order must be the canonical one
    with pytest.raises(InputError):
        cmd_certify(seal("reduction", bad["body"]), cyclic(3), {"x": 1}, "toy")


def test_toy_certificate_claims(toy_cert):
    body = toy_cert["body"]
    assert body["scale"] == "toy" and "truncated" not in body
    claims = {c["id"]: c for c in body["claims"]}
    assert claims["toy.separates"]["holds"] is True
    assert claims["toy.distinct"]["holds"] is True
    assert all(c["holds"] for c in claims.values() if c["kind"] == "claim")
    assert body["witness_rank"] == {"c": 3, "numerator": 5}


def test_toy_certificate_deterministic(cube_reduction, toy_cert):
    assert cmd_certify(cube_reduction, cyclic(3), {"x": 1}, "toy", seed=7) == toy_cert


def test_certify_through_source_generators(cube_reduction):
    # images may be given on the original generators of a rewritten presentation
    red = cmd_reduce(CUBE_PRES, parse_word("x x"))
    cert = cmd_certify(red, cyclic(3), {"x": 1}, "toy", seed=1)
    assert cmd_verify(cert)["status"] == "pass"


# ---- verify -----------------------------------------------------------------


def test_verify_toy_all_pass(toy_cert):
    report = cmd_verify(toy_cert)
    assert report["status"] == "pass" and report["failed"] == []
    assert report["passed"] == len(toy_cert["body"]["claims"]) + 1


def test_verify_altered_dump_localized(toy_cert):
    bad = copy.deepcopy(toy_cert)
    sub = bad["body"]["weak_rep"]["subspaces"]["6"]
    sub["entries"][first_nonzero_entry(sub)] += 1
    report = cmd_verify(bad)
    assert report["status"] == "fail"
    assert report["failed"] == ["integrity.weak_rep"]
    deep = cmd_verify(bad, deep=True)
    assert "integrity.weak_rep" in deep["failed"] and "weak_rep.rebuilt" in deep["failed"]


def test_verify_altered_trace_step_localized(toy_cert):
    bad = copy.deepcopy(toy_cert)
    bad["body"]["toy"]["trace"]["steps"][1]["ambient_growth"] += 1
    assert cmd_verify(bad)["failed"] == ["integrity.toy", "integrity.toy.steps[2]"]


def test_verify_forged_weak_rep(toy_cert):
    def edit(body):
        sub = body["weak_rep"]["subspaces"]["6"]
        sub["entries"][first_nonzero_entry(sub)] += 1

    report = cmd_verify(forge_body(toy_cert, edit))
    assert report["status"] == "fail"
    assert "integrity" not in report["failed"]
    assert "weak_rep.rebuilt" in report["failed"]


def test_verify_forged_step_piece(toy_cert):
    def edit(body):
        pieces = body["toy"]["trace"]["steps"][0]["added"]["pieces"]
        rows = next(iter(pieces.values()))[1]
        rows[0][0] += 1

    report = cmd_verify(forge_body(toy_cert, edit))
    assert report["status"] == "fail"
    assert any(f.startswith("toy.steps[1].") for f in report["failed"])


def test_verify_forged_claim(toy_cert):
    def edit(body):
        next(c for c in body["claims"] if c["id"] == "toy.separates")["holds"] = False

    assert cmd_verify(forge_body(toy_cert, edit))["failed"] == ["toy.separates"]


def test_verify_dropped_and_invented_claims(toy_cert):
    def drop(body):
        body["claims"] = [c for c in body["claims"] if c["id"] != "toy.double"]

    def invent(body):
        body["claims"].append({"id": "toy.extra", "kind": "claim", "holds": True})

    assert cmd_verify(forge_body(toy_cert, drop))["failed"] == ["toy.double"]
    assert cmd_verify(forge_body(toy_cert, invent))["failed"] == ["toy.extra"]


def test_verify_observation_cannot_become_claim(toy_cert):
    # claim kinds are part of what is checked
    def edit(body):
        body["claims"][0]["kind"] = "observation"

    assert cmd_verify(forge_body(toy_cert, edit))["status"] == "fail"


def test_verify_rejects_foreign_reduction(toy_cert):
    other = cmd_reduce(CUBE_PRES, parse_word("x x"))

    def edit(body):
        body["reduction"] = other

    report = cmd_verify(forge_body(toy_cert, edit))
    assert report["status"] == "rejected" and report["failed"] == ["reduction"]


def test_verify_rejects_edited_reduction(toy_cert):
    bad = copy.deepcopy(toy_cert)
    bad["body"]["reduction"]["body"]["schema"] = 2
    assert cmd_verify(bad)["status"] == "rejected"


@pytest.mark.parametrize("junk", [None, [], {"kind": "certificate"}, {"kind": "reduction", "hash_name": "sha256", "body": {}}])
def test_verify_rejects_garbage(junk):
    assert cmd_verify(junk)["status"] == "rejected"


def test_verify_broken_body_fails_cleanly(toy_cert):
    def edit(body):
        del body["toy"]["cbasis"]

    report = cmd_verify(forge_body(toy_cert, edit))
    assert report["status"] == "fail"
    assert "toy.cbasis" in report["failed"]


def test_toy_mutations_detected(toy_cert):
    paths = list(leaves(toy_cert))
    for path in random.Random(3).sample(paths, 40):
        assert cmd_verify(mutate(toy_cert, path))["status"] != "pass", path


# ---- truncated --------------------------------------------------------------


def test_truncated_certificate(truncated_cert):
    body = truncated_cert["cert"]["body"]
    assert body["scale"] == f"truncated:{TRUNCATED_STEPS}"
    assert len(body["truncated"]["trace"]["steps"]) == TRUNCATED_STEPS
    assert body["witness_rank"] == {"c": 3, "numerator": 5}
    report = truncated_cert["report"]
    assert report["status"] == "pass", report["failed"]
    obs = [r for r in report["claims"] if r["kind"] == "observation"]
    assert [r["id"] for r in obs] == ["truncated.well_separated"]
    # a prefix of the order does not yet separate the doubled arrangement
    assert obs[0]["recomputed"] is False
