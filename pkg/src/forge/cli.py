"""Command line entry point: ``forge <command>``."""
from __future__ import annotations

import argparse
import json
import sys

from forge.arrangement import Arrangement
from forge.dowling import build_dowling, build_weak_rep, weak_rep_violation, witness_rank
from forge.errors import AuditFailure, ForgeError, GenericityFailure, InputError
from forge.exactla import PrimeField, default_prime
from forge.expansion import bruteforce_expansions_1arr, generic_c_basis, separates, separating_basis
from forge.groups import FiniteGroup, Homomorphism, Presentation, lift_images, normalize
from forge.inflation import full_alg_pipeline, rank_poly
from forge.io import read_json, write_json
from forge.matroids import Polymatroid, TriangleMatroid, bits, build_subset_order
from forge.pipeline import cmd_certify, cmd_reduce, cmd_verify, parse_word

PASS, CLAIM_FAILURE, INPUT_ERROR = 0, 1, 2


def _presentation(args) -> Presentation:
    pres = Presentation.from_json(read_json(args.presentation))
    if getattr(args, "word", None):
        pres = Presentation(pres.generators, pres.relators, parse_word(args.word))
    return pres


def _images(path: str) -> dict:
    obj = read_json(path)
    if not isinstance(obj, dict) or not isinstance(obj.get("images"), dict):
        raise InputError(f"{path}: expected {{\"images\": {{generator: element}}}}")
    return obj["images"]


def _say(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def run_reduce(args) -> int:
    red = cmd_reduce(_presentation(args))
    write_json(args.out, red)
    body = red["body"]
    _say({"elements": len(body["matroid"]["elements"]), "combinatorial": body["combinatorial"]["complete"], "hash": red["hash"]})
    return PASS


def run_certify(args) -> int:
    red = read_json(args.reduction)
    group = FiniteGroup.from_json(read_json(args.group))
    cert = cmd_certify(red, group, _images(args.hom), args.scale, args.seed)
    write_json(args.out, cert)
    failed = [c["id"] for c in cert["body"]["claims"] if c["kind"] == "claim" and not c["holds"]]
    _say({"claims": len(cert["body"]["claims"]), "failed": failed, "hash": cert["hash"]})
    return CLAIM_FAILURE if failed else PASS


def run_verify(args) -> int:
    report = cmd_verify(read_json(args.certificate), deep=args.deep)
    if args.report:
        write_json(args.report, report)
    for row in report["claims"]:
        print(f"{'PASS' if row['pass'] else 'FAIL'} {row['id']}")
    print(report["status"].upper() + (f": {report['reason']}" if "reason" in report else ""))
    return PASS if report["status"] == "pass" else CLAIM_FAILURE


def run_dowling(args) -> int:
    m = build_dowling(normalize(_presentation(args)))
    write_json(args.out, m.to_json())
    _say({"elements": m.n, "flats": len(m.flats2)})
    return PASS


def run_weakrep(args) -> int:
    normal = normalize(_presentation(args))
    m = build_dowling(normal)
    group = FiniteGroup.from_json(read_json(args.group))
    h = Homomorphism(normal, group, lift_images(normal, group, _images(args.hom)))
    a = build_weak_rep(m, group, h, PrimeField(default_prime()))
    write_json(args.out, a.to_json())
    if args.matroid_out:
        write_json(args.matroid_out, m.to_json())
    _say({"c": a.c, "ambient": a.ambient, "elements": a.n})
    return PASS


def _arr_and_matroid(args) -> tuple[Arrangement, TriangleMatroid]:
    return Arrangement.from_json(read_json(args.arr)), TriangleMatroid.from_json(read_json(args.matroid))


def run_check_weak(args) -> int:
    a, m = _arr_and_matroid(args)
    bad = weak_rep_violation(a, m)
    if bad is None:
        _say({"weak_rep": True})
        return PASS
    mask, reason = bad
    _say({"weak_rep": False, "witness": [m.labels[i] for i in bits(mask)], "reason": reason})
    return CLAIM_FAILURE


def run_witness(args) -> int:
    a, m = _arr_and_matroid(args)
    w = witness_rank(a, m, args.word)
    _say({"witness_rank": str(w), "is_witness": w.is_witness})
    return PASS


def run_inflate(args) -> int:
    a, m = _arr_and_matroid(args)
    if args.order != "auto":
        raise InputError("only --order auto (size, then mask) is supported")
    u, trace = full_alg_pipeline(a, m, build_subset_order(m), max_steps=args.max_steps, seed=args.seed, check=args.check)
    write_json(args.out, u.to_json())
    if args.trace:
        write_json(args.trace, trace.to_json())
    _say({"steps": len(trace.steps), "ambient": u.ambient})
    return PASS


def run_cbasis(args) -> int:
    a = Arrangement.from_json(read_json(args.arr))
    c = a.c // 2 if args.half else a.c
    cb = generic_c_basis(a, [args.seed], c=c)
    write_json(args.out, cb.to_json())
    _say({"pieces": cb.ground.size, "c": cb.c})
    return PASS


def run_separate(args) -> int:
    w, m = _arr_and_matroid(args)
    x, y = m.id_of(args.x), m.id_of(args.y)
    cb = separating_basis(w, m, x, [args.seed])
    if args.out:
        write_json(args.out, cb.to_json())
    ok = separates(cb.combinatorial_type(), x, y, rank_poly(w))
    _say({"separates": ok, "pieces": cb.ground.size})
    return PASS if ok else CLAIM_FAILURE


def run_expansions(args) -> int:
    if not args.brute:
        raise InputError("only brute-force enumeration (--brute) is available")
    g = Polymatroid.from_json(read_json(args.poly))
    found = sorted(bruteforce_expansions_1arr(g, args.p), key=lambda n: n.table.tolist())
    if args.out:
        write_json(args.out, {"expansions": [n.to_json(g.labels) for n in found]})
    _say({"expansions": len(found)})
    return PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="forge", description="Group presentations to matroids, inflation and certificates")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", help="normalize a presentation and build the reduction output")
    p.add_argument("-p", "--presentation", required=True)
    p.add_argument("-w", "--word", help="word to test, letters separated by spaces; x^-1 is an inverse")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=run_reduce)

    p = sub.add_parser("certify", help="build a certificate from a finite-group witness")
    p.add_argument("-r", "--reduction", required=True)
    p.add_argument("-G", "--group", required=True)
    p.add_argument("-H", "--hom", required=True)
    p.add_argument("--scale", default="truncated:30", help="toy, truncated:N or full")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=run_certify)

    p = sub.add_parser("verify", help="recompute every claim of a certificate")
    p.add_argument("-c", "--certificate", required=True)
    p.add_argument("--report")
    p.add_argument("--deep", action="store_true", help="recompute claims even when the hashes do not match")
    p.set_defaults(func=run_verify)

    p = sub.add_parser("dowling", help="write the Dowling matroid of a presentation")
    p.add_argument("-p", "--presentation", required=True)
    p.add_argument("-w", "--word")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=run_dowling)

    p = sub.add_parser("weakrep", help="weak representation from a homomorphism to a finite group")
    p.add_argument("-p", "--presentation", required=True)
    p.add_argument("-w", "--word")
    p.add_argument("-G", "--group", required=True)
    p.add_argument("-H", "--hom", required=True)
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--matroid-out")
    p.set_defaults(func=run_weakrep)

    for name, func, helptext in (
        ("check-weak", run_check_weak, "exhaustive weak representation check"),
        ("witness", run_witness, "witness rank of the word generator"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--arr", required=True)
        p.add_argument("--matroid", required=True)
        if name == "witness":
            p.add_argument("-w", "--word", required=True, help="generator name of the word")
        p.set_defaults(func=func)

    p = sub.add_parser("inflate", help="run the algebraic inflation pipeline")
    p.add_argument("--arr", required=True)
    p.add_argument("--matroid", required=True)
    p.add_argument("--order", default="auto")
    p.add_argument("--max-steps", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--check", default="auto", choices=["auto", "full", "sample", "off"])
    p.add_argument("--out", required=True)
    p.add_argument("--trace")
    p.set_defaults(func=run_inflate)

    p = sub.add_parser("cbasis", help="generic c-basis of a c-admissible arrangement")
    p.add_argument("--arr", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--half", action="store_true", help="split a doubled arrangement into pieces of half its c")
    p.add_argument("--out", required=True)
    p.set_defaults(func=run_cbasis)

    p = sub.add_parser("separate", help="separating c-basis of a doubled arrangement")
    p.add_argument("--arr", required=True)
    p.add_argument("--matroid", required=True)
    p.add_argument("--x", required=True, help="label of the bottom element to separate, e.g. x^(1)")
    p.add_argument("--y", default="e^(1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=run_separate)

    p = sub.add_parser("expansions", help="enumerate expansions of a micro polymatroid")
    p.add_argument("--brute", action="store_true")
    p.add_argument("--poly", required=True)
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--out")
    p.set_defaults(func=run_expansions)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GenericityFailure, AuditFailure) as exc:
        print(f"forge: {type(exc).__name__}: {exc}", file=sys.stderr)
        return CLAIM_FAILURE
    except ForgeError as exc:
        print(f"forge: {type(exc).__name__}: {exc}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
