"""Batch command-line front end.

Subcommands: witness, refute, oracle, partition, check.  All input and
output is JSON; reports embed every term they mention, so a saved report
can be replayed standalone by ``check``.  Runs are deterministic:
identical invocations (including --seed) produce byte-identical reports.

Exit codes: 0 success with all verifications passing, 2 verification or
replay failure, 3 capability / budget / input errors (argparse uses its
own exit code for usage errors).
"""

from __future__ import annotations

import argparse
import json
import sys

from . import combinators as cb
from . import leftwitness as lw
from . import oracle as orc
from . import refute as rf
from . import rightwitness as rw
from .capability import (MalformedCapability, MissingCapability, WindowReport)
from .classes import PartialMapExpr, build_element, member_check, normalize_tag
from .partitions import (FinitePartition, render_ascii,
                         symbolic_from_descriptor, verify_diagonal_witness,
                         verify_diagonal_witness_starred)
from .sequences import DerivationSequence, verify_sequence
from .terms import BudgetExhausted, TermError, UnknownGenerator

EXIT_OK = 0
EXIT_VERIFY = 2
EXIT_CAPABILITY = 3


def _load_json_arg(value: str):
    """Accept inline JSON or a path to a JSON file."""
    value = value.strip()
    if value.startswith("{") or value.startswith("["):
        return json.loads(value)
    with open(value) as fh:
        return json.load(fh)


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _report(command: str, inputs: dict, outputs: dict,
            verification: dict | None, status: int) -> dict:
    return {
        "kind": "run-report",
        "command": command,
        "inputs": inputs,
        "outputs": outputs,
        "verification": verification,
        "exit_status": status,
    }


def _window_json(rep: WindowReport) -> dict:
    return {"window": rep.window, "status": rep.status,
            "checks_run": rep.checks_run, "witness": rep.witness}


_RIGHT_WITNESSES = {
    "T": lambda t, ct, p, cp, w: rw.right_witness_total(t, p, ct, cp),
    "F": lambda t, ct, p, cp, w: rw.right_witness_finite_to_one(t, p, ct, cp),
    "H": lambda t, ct, p, cp, w: rw.right_witness_finite_to_one(t, p, ct, cp),
    "TNotSurj": lambda t, ct, p, cp, w:
        rw.right_witness_non_surjective(t, p, ct, cp),
    "BL": lambda t, ct, p, cp, w: rw.right_witness_bl(t, p, ct, cp, window=w),
    "BL1": lambda t, ct, p, cp, w: rw.right_witness_bl(t, p, ct, cp, window=w),
    "Inj": lambda t, ct, p, cp, w:
        rw.right_witness_injective(t, p, ct, cp, window=w),
    "SymBL": lambda t, ct, p, cp, w:
        rw.right_witness_injective(t, p, ct, cp, window=w),
    "I": lambda t, ct, p, cp, w: rw.right_witness_partial_bijections(t, p),
}

_LEFT_WITNESSES = {
    "T": lambda t, ct, p, cp, w: lw.left_witness_total(t, p, ct, cp),
    "TNotInj": lambda t, ct, p, cp, w:
        lw.left_witness_non_injective(t, p, ct, cp),
    "DBL": lambda t, ct, p, cp, w: lw.left_witness_dbl(t, p, ct, cp),
    "DBL1": lambda t, ct, p, cp, w: lw.left_witness_dbl1(t, p, ct, cp),
    "Surj": lambda t, ct, p, cp, w: lw.left_witness_surjective(t, p, ct, cp),
    "SymDBL": lambda t, ct, p, cp, w: lw.left_witness_surjective(t, p, ct, cp),
}


def cmd_witness(args) -> int:
    table = _RIGHT_WITNESSES if args.side == "right" else _LEFT_WITNESSES
    if args.cls not in table:
        print(f"error: no {args.side} witness constructor for class {args.cls}",
              file=sys.stderr)
        return EXIT_CAPABILITY
    theta_spec = _load_json_arg(args.theta)
    phi_spec = _load_json_arg(args.phi)
    theta, cap_t = build_element(theta_spec)
    phi, cap_p = build_element(phi_spec)
    res = table[args.cls](theta, cap_t, phi, cap_p, args.window)
    rep = verify_sequence(res.sequence, args.window)
    report = _report(
        "witness",
        {"side": args.side, "class": args.cls, "theta": theta_spec,
         "phi": phi_spec, "window": args.window, "seed": args.seed},
        {"sequence": res.sequence.to_json(), "length": len(res.sequence),
         "notes": list(res.notes)},
        _window_json(rep),
        EXIT_OK if rep.ok else EXIT_VERIFY)
    _emit(report, args.out)
    return report["exit_status"]


_REFUTERS = {
    "right-ideal": lambda units, a: rf.refute_right_ideal_fg(units),
    "left-ideal": lambda units, a: rf.refute_left_ideal_fg(units),
    "right-cong": lambda units, a:
        rf.refute_right_cong_depth(units, a.depth, budget=a.budget),
    "left-cong": lambda units, a:
        rf.refute_left_cong_depth(units, a.depth, budget=a.budget),
    "right-depth3-inj": lambda units, a: rf.refute_right_depth3_inj(units),
    "left-depth2-surj": lambda units, a: rf.refute_left_depth2_surj(units),
    "left-depth3-surj": lambda units, a: rf.refute_left_depth3_surj(units),
}


def cmd_refute(args) -> int:
    gens = _load_json_arg(args.gens)
    if args.target == "right-depth2-bl":
        pair_set = [(build_element(l), build_element(r))
                    for l, r in gens["pairs"]]
        cert = rf.refute_right_depth2_bl(pair_set)
    else:
        if args.target not in _REFUTERS:
            print(f"error: unknown refutation target {args.target}",
                  file=sys.stderr)
            return EXIT_CAPABILITY
        units = [build_element(spec) for spec in gens["units"]]
        cert = _REFUTERS[args.target](units, args)
    replay = rf.check_certificate(cert)
    report = _report(
        "refute",
        {"target": args.target, "depth": args.depth, "gens": gens,
         "seed": args.seed, "budget": args.budget},
        {"certificate": cert.to_json()},
        {"replay_ok": replay.ok, "assertions": replay.assertions_checked},
        EXIT_OK if replay.ok else EXIT_VERIFY)
    _emit(report, args.out)
    return report["exit_status"]


def cmd_check(args) -> int:
    data = _load_json_arg(args.file)
    if data.get("format") == "refutation/1":
        replay = rf.check_certificate(data)
        _emit({"kind": "check-report", "target": "certificate",
               "ok": replay.ok, "assertions": replay.assertions_checked,
               "detail": replay.detail}, args.out)
        return EXIT_OK if replay.ok else EXIT_VERIFY
    if data.get("kind") == "run-report":
        outputs = data.get("outputs", {})
        if "certificate" in outputs:
            replay = rf.check_certificate(outputs["certificate"])
            ok = replay.ok
        elif "sequence" in outputs:
            seq = DerivationSequence.from_json(outputs["sequence"])
            window = data.get("inputs", {}).get("window", 1024)
            ok = verify_sequence(seq, window).ok
        else:
            print("error: report carries nothing checkable", file=sys.stderr)
            return EXIT_CAPABILITY
        _emit({"kind": "check-report", "target": "run-report", "ok": ok},
              args.out)
        return EXIT_OK if ok else EXIT_VERIFY
    print("error: unrecognized file format", file=sys.stderr)
    return EXIT_CAPABILITY


def _load_oracle_gens(spec: dict):
    if spec.get("kind", "transformations") == "transformations":
        return [tuple(g) for g in spec["gens"]], orc.transformation_product
    if spec["kind"] == "partitions":
        return [FinitePartition.from_json(g) for g in spec["gens"]], \
            orc.transformation_product
    raise ValueError(f"unknown generator kind {spec.get('kind')!r}")


def _parse_pairs(text: str):
    pairs = []
    for chunk in text.split(";"):
        a, b = chunk.split(",")
        pairs.append((int(a), int(b)))
    return pairs


def cmd_oracle(args) -> int:
    spec = _load_json_arg(args.gens)
    gens, product = _load_oracle_gens(spec)
    sg = orc.generate_semigroup(gens, product, max_elements=args.cap)
    inputs = {"gens": spec, "side": args.side, "seed": args.seed}
    if args.action == "gen":
        outputs = {"size": len(sg),
                   "identity_index": sg.identity_index,
                   "elements": [list(e) if isinstance(e, tuple) else e.to_json()
                                for e in sg.elements[:64]]}
        _emit(_report("oracle gen", inputs, outputs, None, EXIT_OK), args.out)
        return EXIT_OK
    if args.action == "diam":
        pairs = _parse_pairs(args.pairs)
        dist = orc.distance_matrix(sg, pairs, args.side)
        diam = orc.diameter_for(sg, pairs, args.side)
        outputs = {"pairs": pairs, "universal": diam != orc.INF,
                   "diameter": None if diam is orc.INF else diam}
        if args.csv:
            with open(args.csv, "w") as fh:
                for row in dist:
                    fh.write(",".join("inf" if d is orc.INF else str(d)
                                      for d in row) + "\n")
            outputs["csv"] = args.csv
        _emit(_report("oracle diam", inputs, outputs, None, EXIT_OK), args.out)
        return EXIT_OK
    if args.action == "search":
        res = orc.search_min_diameter(sg, args.max_pairs, args.side,
                                      seed=args.seed)
        outputs = {"diameter": None if res.diameter is orc.INF else res.diameter,
                   "pairs": [list(p) for p in res.pairs],
                   "exhaustive": res.exhaustive, "examined": res.examined}
        _emit(_report("oracle search", inputs, outputs, None, EXIT_OK),
              args.out)
        return EXIT_OK
    print(f"error: unknown oracle action {args.action}", file=sys.stderr)
    return EXIT_CAPABILITY


def cmd_partition(args) -> int:
    if args.action == "mul":
        left = FinitePartition.from_json(_load_json_arg(args.left))
        right = FinitePartition.from_json(_load_json_arg(args.right))
        _emit((left * right).to_json(), args.out)
        return EXIT_OK
    if args.action == "star":
        left = FinitePartition.from_json(_load_json_arg(args.left))
        _emit(left.star().to_json(), args.out)
        return EXIT_OK
    if args.action == "render":
        left = FinitePartition.from_json(_load_json_arg(args.left))
        print(render_ascii(left))
        return EXIT_OK
    if args.action == "check":
        if args.example:
            data = _load_json_arg(args.example)
            left = FinitePartition.from_json(data["left"])
            right = FinitePartition.from_json(data["right"])
            want = FinitePartition.from_json(data["product"])
            ok = left * right == want
            _emit({"kind": "check-report", "target": "finite-product",
                   "ok": ok}, args.out)
            return EXIT_OK if ok else EXIT_VERIFY
        theta = symbolic_from_descriptor(_load_json_arg(args.theta))
        phi = symbolic_from_descriptor(_load_json_arg(args.phi))
        rep = verify_diagonal_witness(theta, phi, args.window)
        rep2 = verify_diagonal_witness_starred(theta, phi, args.window // 2)
        ok = rep.ok and rep2.ok
        _emit({"kind": "check-report", "target": "diagonal-witness",
               "ok": ok, "right": _window_json(rep),
               "left_starred": _window_json(rep2)}, args.out)
        return EXIT_OK if ok else EXIT_VERIFY
    print(f"error: unknown partition action {args.action}", file=sys.stderr)
    return EXIT_CAPABILITY


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="semidiameter",
        description="derivation-sequence witnesses, refuters and oracles "
                    "for transformation and partition semigroups")
    sub = ap.add_subparsers(dest="command", required=True)

    w = sub.add_parser("witness", help="construct and verify a derivation "
                                       "sequence")
    w.add_argument("--side", choices=["right", "left"], required=True)
    w.add_argument("--class", dest="cls", required=True,
                   type=normalize_or_keep)
    w.add_argument("--theta", required=True, help="element spec (JSON or file)")
    w.add_argument("--phi", required=True)
    w.add_argument("--window", type=int, default=4096)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--out")
    w.set_defaults(fn=cmd_witness)

    r = sub.add_parser("refute", help="emit a depth-bounded refutation "
                                      "certificate")
    r.add_argument("--target", required=True)
    r.add_argument("--depth", type=int, default=1)
    r.add_argument("--gens", required=True)
    r.add_argument("--budget", type=int, default=4096)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out")
    r.set_defaults(fn=cmd_refute)

    c = sub.add_parser("check", help="replay a saved report or certificate")
    c.add_argument("file")
    c.add_argument("--out")
    c.set_defaults(fn=cmd_check)

    o = sub.add_parser("oracle", help="finite semigroup ground truth")
    o.add_argument("action", choices=["gen", "diam", "search"])
    o.add_argument("--gens", required=True)
    o.add_argument("--side", choices=["right", "left"], default="right")
    o.add_argument("--pairs", default="",
                   help="semicolon-separated index pairs, e.g. 0,1;2,3")
    o.add_argument("--max-pairs", type=int, default=3)
    o.add_argument("--cap", type=int, default=4096)
    o.add_argument("--csv")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--out")
    o.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("partition", help="finite diagram arithmetic and "
                                         "symbolic checks")
    p.add_argument("action", choices=["mul", "star", "check", "render"])
    p.add_argument("--left")
    p.add_argument("--right")
    p.add_argument("--theta")
    p.add_argument("--phi")
    p.add_argument("--example")
    p.add_argument("--window", type=int, default=256)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_partition)
    return ap


def normalize_or_keep(tag: str) -> str:
    try:
        canonical = normalize_tag(tag)
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown class tag {tag!r}")
    # H keeps its own witness entry (same construction as F)
    return tag if tag == "H" else canonical


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (MissingCapability, MalformedCapability, BudgetExhausted,
            UnknownGenerator, TermError, rf.RefutationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY


if __name__ == "__main__":
    sys.exit(main())
