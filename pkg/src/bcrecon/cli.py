"""Command line interface.

Exit codes: 0 on success (Equivalent, ConjugacyData), 2 on a negative verdict
(NotEquivalent, Mismatch), 1 on errors and 64 on usage errors. Reports are
canonical JSON (sorted keys) with a schema tag and input hashes; timings are
only included with ``--timings`` so that reports stay byte-reproducible.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import random
import sys
import time
from importlib import resources
from pathlib import Path
from typing import Sequence

from .bostconnes import (EquivarianceFailure, Mismatch, build_family, build_truncated_conjugacy,
                         builtin_rationals, dumps_family, dumps_field, galois_chain,
                         load_family, load_field_data, match_families, recover_P1_and_h)
from .completions import CompletionChain, cofinal_equivalent, limit_structure, NotRegular
from .fixtures import FixtureSpec, PrimeSpec, random_completion
from .kgroups import KSubgroup, k_from_chain
from .recon import reconstruct_appendix, reconstruct_proN

REPORT_SCHEMA = "bcrecon.report/1"
CHAIN_SCHEMA = "bcrecon.chain/1"
EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _hash_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class _Inputs:
    """Reads input files and remembers a hash of each."""

    def __init__(self):
        self.hashes: dict[str, str] = {}

    def read_json(self, path: str, role: str) -> dict:
        if path.startswith("builtin:"):
            name = path.split(":", 1)[1]
            text = resources.files("bcrecon.data").joinpath(f"{name}.json").read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        data = json.loads(text)
        self.hashes[role] = _hash_text(canonical(data))
        return data


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _int_list(text: str | None) -> list[int]:
    if not text:
        return []
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma separated integer list, got {text!r}") from exc


def _chain_dict(chain: CompletionChain, meta: dict | None = None) -> dict:
    out = {"schema": CHAIN_SCHEMA, **chain.to_dict()}
    if meta is not None:
        out["meta"] = meta
    return out


def _load_chain(inputs: _Inputs, path: str, role: str) -> CompletionChain:
    data = inputs.read_json(path, role)
    try:
        return CompletionChain.from_dict(data)
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValueError(f"{path} is not a completion chain file (missing {exc})") from exc


def _read_k(inputs: _Inputs, path: str) -> KSubgroup:
    data = inputs.read_json(path, "kdata")
    try:
        return KSubgroup.from_dict(data)
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValueError(f"{path} is not a K-data file (missing {exc})") from exc


def _load_k(inputs: _Inputs, args) -> KSubgroup:
    if getattr(args, "kdata", None):
        return _read_k(inputs, args.kdata)
    if getattr(args, "chain", None):
        return k_from_chain(_load_chain(inputs, args.chain, "chain"))
    raise UsageError("one of --kdata or --chain is required")


def _parse_chi(text: str | None, left: Sequence[str], right: Sequence[str]) -> dict[str, str]:
    if not text:
        if len(left) != len(right):
            raise UsageError("truncations differ in size; pass --chi")
        return dict(zip(left, right))
    chi = {}
    for pair in text.split(","):
        if ":" not in pair:
            raise UsageError(f"bad --chi entry {pair!r}; expected a:b")
        a, b = pair.split(":", 1)
        chi[a.strip()] = b.strip()
    return chi


# ---------------------------------------------------------------- commands

def cmd_gen_completion(args, inputs):
    rng = random.Random(args.seed)
    primes = _int_list(args.primes) or [2]
    parts = []
    if args.part:
        for spec in args.part:
            try:
                p, d, *rest = spec.split(":")
                tor = tuple(sorted(_int_list(rest[0]) if rest else []))
                parts.append(PrimeSpec(int(p), int(d), tor))
            except ValueError as exc:
                raise UsageError(f"bad --part {spec!r}; expected p:d[:t1,t2]") from exc
    else:
        for p in primes:
            d = rng.randint(0, args.rank)
            n_tor = rng.randint(0, args.rank - d)
            parts.append(PrimeSpec(p, d, tuple(sorted(rng.randint(1, 3) for _ in range(n_tor)))))
    spec = FixtureSpec(args.rank, tuple(parts), args.depth, rng.randrange(2 ** 31))
    chain, meta = random_completion(spec)
    _emit(canonical(_chain_dict(chain, meta)), args.out)
    return EXIT_OK, None


def cmd_kdata(args, inputs):
    chain = _load_chain(inputs, args.chain, "chain")
    K = k_from_chain(chain, args.max_degree)
    _emit(canonical(K.to_dict(strip_provenance=args.strip)), args.out)
    return EXIT_OK, None


def _chain_report(chain: CompletionChain) -> dict:
    out = {"chain": chain.to_dict(), "indices": [chain.index(k) for k in range(1, chain.depth + 1)]}
    try:
        out["limit"] = limit_structure(chain).to_json()
    except NotRegular as exc:
        out["limit"] = {"error": str(exc)}
    return out


def cmd_reconstruct(args, inputs):
    K = _load_k(inputs, args)
    result, verdicts = {}, {}
    if args.method in ("section3", "both"):
        result["section3"] = _chain_report(reconstruct_proN(K, args.depth, args.coeff_bound, args.budget))
    if args.method in ("appendix", "both"):
        result["appendix"] = _chain_report(reconstruct_appendix(K, args.depth))
    code = EXIT_OK
    if args.method == "both":
        a = CompletionChain.from_dict(result["section3"]["chain"])
        b = CompletionChain.from_dict(result["appendix"]["chain"])
        v = cofinal_equivalent(a, b, min(a.depth, b.depth))
        verdicts["cross"] = v.to_json()
        code = EXIT_OK if v else EXIT_NEGATIVE
    return code, {"result": result, "verdicts": verdicts}


def cmd_verify(args, inputs):
    truth = _load_chain(inputs, args.chain, "chain")
    if args.against:
        other = _load_chain(inputs, args.against, "against")
    else:
        K = _read_k(inputs, args.kdata) if args.kdata else k_from_chain(truth)
        other = (reconstruct_appendix(K, args.depth) if args.method == "appendix"
                 else reconstruct_proN(K, args.depth, args.coeff_bound, args.budget))
    depth = min(truth.depth, other.depth)
    v = cofinal_equivalent(truth, other, depth)
    return (EXIT_OK if v else EXIT_NEGATIVE), {"verdicts": {"cofinal": v.to_json()},
                                               "result": {"depth": depth}}


def cmd_gen_field_q(args, inputs):
    data = builtin_rationals(_int_list(args.S), _int_list(args.F), args.depth)
    _emit(dumps_field(data), args.out)
    return EXIT_OK, None


def _field(inputs, path, role):
    return load_field_data(inputs.read_json(path, role))


def cmd_load_field(args, inputs):
    data = _field(inputs, args.field, "field")
    entries = [{"F": list(F), "m": list(m), "order": e.order, "factors": list(e.factors)}
               for (F, m), e in sorted(data.tower.items(), key=lambda kv: (len(kv[0][0]), kv[0]))]
    chain0 = galois_chain(data, ())
    return EXIT_OK, {"result": {"label": data.label, "h1": data.h1, "primes": list(data.labels),
                                "f_max": list(data.f_max), "depth": data.depth, "entries": entries,
                                "class_kernel": chain0.level(1).to_dict()},
                     "verdicts": {"valid": True}}


def cmd_invariant_family(args, inputs):
    data = _field(inputs, args.field, "field")
    fam = build_family(data, args.depth)
    _emit(dumps_family(fam), args.out)
    return EXIT_OK, None


def _family(inputs, args, which):
    fam_path = getattr(args, f"family_{which}")
    field_path = getattr(args, f"field_{which}", None)
    if fam_path:
        return load_family(inputs.read_json(fam_path, f"family_{which}"))
    if field_path:
        return build_family(_field(inputs, field_path, f"field_{which}"), args.depth)
    raise UsageError(f"--family-{which} or --field-{which} is required")


def cmd_match(args, inputs):
    fk, fl = _family(inputs, args, "k"), _family(inputs, args, "l")
    chi = _parse_chi(args.chi, fk.order, fl.order)
    v = match_families(fk, fl, chi, args.coeff_bound, args.budget)
    if isinstance(v, Mismatch):
        return EXIT_NEGATIVE, {"verdicts": {"match": v.to_json()}}
    rK, rL = recover_P1_and_h(fk), recover_P1_and_h(fl)
    return EXIT_OK, {"verdicts": {"match": {"verdict": "ConjugacyData", "h": v.h,
                                            "identical": {",".join(F): x for F, x in v.identical.items()}}},
                     "result": {"data": v.to_json(), "recovery": [rK.to_json(), rL.to_json()]}}


def cmd_conjugacy(args, inputs):
    fieldK = _field(inputs, args.field_k, "field_k")
    fieldL = _field(inputs, args.field_l, "field_l")
    depth = args.family_depth or fieldK.depth
    fk, fl = build_family(fieldK, depth), build_family(fieldL, depth)
    chi = _parse_chi(args.chi, fk.order, fl.order)
    v = match_families(fk, fl, chi, args.coeff_bound, args.budget)
    if isinstance(v, Mismatch):
        return EXIT_NEGATIVE, {"verdicts": {"match": v.to_json()}}
    F = [q.strip() for q in (args.F or "").split(",") if q.strip()]
    try:
        _, AK, _, cert = build_truncated_conjugacy(fieldK, fieldL, v, F, args.m, args.e)
    except EquivarianceFailure as exc:
        return EXIT_NEGATIVE, {"verdicts": {"conjugacy": {"verdict": "EquivarianceFailure",
                                                          "detail": str(exc)}}}
    return EXIT_OK, {"verdicts": {"match": {"verdict": "ConjugacyData", "h": v.h},
                                  "conjugacy": {"verdict": "Equivariant", **cert.to_json()}},
                     "result": {"F": F, "m": args.m, "e": args.e,
                                "levels": {",".join(E): len([x for x in AK.states if x[0] == E])
                                           for E in AK.levels()}}}


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="bcrecon", description="Reconstruct profinite completions from K-theoretic data.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, out_help="output file (default: standard output)"):
        p.add_argument("--out", help=out_help)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--depth", type=int, default=None)
        p.add_argument("--budget", type=int, default=None)
        p.add_argument("--coeff-bound", type=int, default=2)
        p.add_argument("--format", choices=("json", "tsv"), default="json", help="report format")
        p.add_argument("--timings", action="store_true", help="include wall-clock timings")

    p = sub.add_parser("gen-completion", help="seeded random completion chain")
    common(p)
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--primes", default="2", help="comma separated primes")
    p.add_argument("--part", action="append", help="p:d[:t1,t2] free rank and torsion for prime p")
    p.set_defaults(func=cmd_gen_completion, depth=5)

    p = sub.add_parser("kdata", help="K-group levels of a chain")
    common(p)
    p.add_argument("--chain", required=True)
    p.add_argument("--max-degree", type=int, default=None)
    p.add_argument("--strip", action="store_true", help="drop provenance and certificates")
    p.set_defaults(func=cmd_kdata)

    p = sub.add_parser("reconstruct", help="reconstruct a chain from K-data")
    common(p)
    p.add_argument("--kdata")
    p.add_argument("--chain", help="compute K-data from this chain first")
    p.add_argument("--method", choices=("section3", "appendix", "both"), default="section3")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("verify", help="cofinal equivalence against a ground-truth chain")
    common(p)
    p.add_argument("--chain", required=True, help="ground-truth chain")
    p.add_argument("--against", help="chain to compare with")
    p.add_argument("--kdata", help="reconstruct from this K-data instead")
    p.add_argument("--method", choices=("section3", "appendix"), default="section3")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen-field-q", help="ray-class tower of Q")
    common(p)
    p.add_argument("--S", default="2,5,7", help="truncated primes")
    p.add_argument("--F", default="3", help="primes allowed in moduli")
    p.set_defaults(func=cmd_gen_field_q, depth=3)

    p = sub.add_parser("load-field", help="validate a tower fixture")
    common(p)
    p.add_argument("--field", required=True, help="path or builtin:NAME")
    p.set_defaults(func=cmd_load_field)

    p = sub.add_parser("invariant-family", help="invariant family of a field")
    common(p)
    p.add_argument("--field", required=True)
    p.set_defaults(func=cmd_invariant_family)

    p = sub.add_parser("match", help="decision pipeline on two families")
    common(p)
    for w in ("k", "l"):
        p.add_argument(f"--family-{w}")
        p.add_argument(f"--field-{w}")
    p.add_argument("--chi", help="prime bijection a:b,c:d (default: pair in order)")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("conjugacy", help="truncated conjugacy with an equivariance check")
    common(p)
    p.add_argument("--field-k", required=True)
    p.add_argument("--field-l", required=True)
    p.add_argument("--chi")
    p.add_argument("--F", default="", help="comma separated prime labels")
    p.add_argument("--m", type=int, default=2, help="modulus depth")
    p.add_argument("--e", type=int, default=2, help="exponent bound")
    p.add_argument("--family-depth", type=int, default=None)
    p.set_defaults(func=cmd_conjugacy)
    return ap


def _tsv(report: dict) -> str:
    lines = [f"command\t{report['command']}"]
    for key, v in sorted(report.get("verdicts", {}).items()):
        if isinstance(v, dict):
            lines.append(f"{key}\t{v.get('verdict', json.dumps(v, sort_keys=True))}")
        else:
            lines.append(f"{key}\t{v}")
    lines.append(f"exit\t{report['exit_code']}")
    return "\n".join(lines) + "\n"


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    inputs = _Inputs()
    start = time.perf_counter()
    try:
        code, body = args.func(args, inputs)
    except UsageError as exc:
        sys.stderr.write(f"bcrecon: usage error: {exc}\n")
        return EXIT_USAGE
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        sys.stderr.write(f"bcrecon: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR
    if body is None:
        return code
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "timings", "format")}
    report = {"schema": REPORT_SCHEMA, "command": args.command, "parameters": params,
              "verdicts": body.get("verdicts", {}), "certificates": body.get("certificates", {}),
              "result": body.get("result", {}), "fixture_hashes": inputs.hashes, "exit_code": code}
    if args.timings:
        report["timings"] = {"seconds": round(time.perf_counter() - start, 6)}
    _emit(_tsv(report) if args.format == "tsv" else canonical(report), args.out)
    return code


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
