"""Round-trip the seeded corpus through both reconstruction paths.

Prints one TSV row per fixture (rank, prime, depth, verdicts, seconds) and a
summary line.

Usage: python scripts/run_corpus.py [--split] [--limit N]
"""
from __future__ import annotations

import argparse
import time

from bcrecon.completions import Equivalent, cofinal_equivalent
from bcrecon.fixtures import corpus, random_completion, split_corpus
from bcrecon.kgroups import k_from_chain
from bcrecon.recon import NotFullRankLevel, reconstruct_appendix, reconstruct_proN


def verdict(a, b) -> str:
    v = cofinal_equivalent(a, b, min(a.depth, b.depth))
    return "eq" if isinstance(v, Equivalent) else f"neq@{v.level}"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--split", action="store_true", help="use the two-prime corpus")
    ap.add_argument("--limit", type=int, default=None)
    args = ap.parse_args()
    specs = (split_corpus() if args.split else corpus())[:args.limit]
    print("i\trank\tprimes\tdepth\tproN\tappendix\tseconds")
    failures = 0
    total = time.perf_counter()
    for i, spec in enumerate(specs):
        chain, _ = random_completion(spec)
        start = time.perf_counter()
        K = k_from_chain(chain)
        pro = verdict(reconstruct_proN(K), chain)
        try:
            app = verdict(reconstruct_appendix(K), chain)
        except NotFullRankLevel:
            app = "n/a"
        failures += pro != "eq" or app not in ("eq", "n/a")
        primes = ",".join(str(p.p) for p in spec.parts)
        print(f"{i}\t{spec.rank}\t{primes}\t{spec.depth}\t{pro}\t{app}\t{time.perf_counter() - start:.3f}")
    print(f"# {len(specs)} fixtures, {failures} failures, {time.perf_counter() - total:.1f}s")


if __name__ == "__main__":
    main()
