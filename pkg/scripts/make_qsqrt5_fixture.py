"""Derive the ray-class tower fixture of Q(sqrt(-5)).

Ideals of Z[w], w^2 = -5, are handled as Z-lattices in Z^2 (coordinates of
a + b w). Ray classes modulo m = p7^k are modelled as pairs (c, u): c in Z/2
is the ideal class, u is a residue in (O/m)^* / {+-1}. With the reference ideal
c0 = p2 (c0^2 = (2)), a principal ideal (x) maps to (0, x mod m), and a
nonprincipal ideal A with A c0 = (x) maps to (1, x mod m). The product of two
classes with c = 1 is (0, x y / 2). The field is imaginary, so narrow and wide
classes agree and the units are +-1.

Usage: python scripts/make_qsqrt5_fixture.py [--depth 3] [--out PATH]
"""
from __future__ import annotations

import argparse
from itertools import product
from pathlib import Path

from bcrecon.bostconnes.fields import (PrimeLabel, dumps_field, relation_lattice,
                                       tower_from_kernels)
from bcrecon.exactla import hnf_basis, lattice_index, standard_lattice

D = -5


def mul(x, y):
    a, b = x
    c, d = y
    return (a * c + D * b * d, a * d + b * c)


def norm(x):
    a, b = x
    return a * a - D * b * b


def ideal(*gens):
    vecs = []
    for g in gens:
        vecs.append(g)
        vecs.append(mul(g, (0, 1)))
    return hnf_basis(vecs, 2)


def ideal_mul(I, J):
    return ideal(*[mul(tuple(int(t) for t in x), tuple(int(t) for t in y))
                   for x in I.columns for y in J.columns])


def ideal_norm(I):
    return lattice_index(I, standard_lattice(2))


def generator(I):
    """A generator of I if it is principal, else None."""
    n = ideal_norm(I)
    r = int(n ** 0.5) + 1
    for a, b in product(range(-r, r + 1), repeat=2):
        if norm((a, b)) == n and I.contains((a, b)):
            return (a, b)
    return None


def sqrt_mod(k: int) -> int:
    """The root of x^2 = -5 mod 7^k with x = 3 mod 7 (Hensel lift)."""
    x, q = 3, 7
    for _ in range(1, k):
        q *= 7
        x = next(y for y in range(x, q, q // 7) if (y * y + 5) % q == 0)
    return x


PRIMES = {  # label -> generators
    "p2": [(2, 0), (1, 1)],
    "p3": [(3, 0), (-1, 1)],
    "p5": [(0, 1)],
    "p7": [(7, 0), (-3, 1)],
}


def class_model(k: int):
    """Ray class group modulo p7^k (k = 0 gives the class group)."""
    M = 7 ** k
    r = sqrt_mod(k) if k else 0
    c0 = ideal(*PRIMES["p2"])

    def red(x):
        u = (x[0] + x[1] * r) % M if k else 0
        return min(u, (-u) % M) if k else 0

    def image(label):
        P = ideal(*PRIMES[label])
        g = generator(P)
        if g is not None:
            return (0, red(g))
        g = generator(ideal_mul(P, c0))
        assert g is not None
        return (1, red(g))

    inv2 = pow(2, -1, M) if k else 0

    def op(x, y):
        c = x[0] + y[0]
        u = x[1] * y[1]
        if c == 2:
            c, u = 0, u * inv2
        if not k:
            return (c, 0)
        u %= M
        return (c, min(u, (-u) % M))

    return image, op


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--depth", type=int, default=3)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1]
                                         / "src" / "bcrecon" / "data" / "q_sqrt_m5.json"))
    args = ap.parse_args()
    labels = ["p2", "p3", "p5", "p7"]
    for q in labels:
        P = ideal(*PRIMES[q])
        assert ideal_norm(P) == int(q[1:]), q
    assert ideal_mul(ideal(*PRIMES["p2"]), ideal(*PRIMES["p2"])) == ideal((2, 0))
    primes = [PrimeLabel(q, int(q[1:])) for q in labels]
    kernels = {}
    image, op = class_model(0)
    gens = [image(q) for q in labels]
    kernels[((), ())] = relation_lattice(len(gens), (0, 0), lambda h, i: op(h, gens[i]))
    for k in range(1, args.depth + 1):
        image, op = class_model(k)
        basis = [q for q in labels if q != "p7"]
        gens = [image(q) for q in basis]
        L = relation_lattice(len(gens), (0, 1), lambda h, i: op(h, gens[i]))
        full = 2 * (6 * 7 ** (k - 1)) // 2
        print(f"k={k}: image order {lattice_index(L, standard_lattice(3))}, ray class group order {full}")
        kernels[(("p7",), (k,))] = L
    h1 = lattice_index(kernels[((), ())], standard_lattice(4))
    data = tower_from_kernels("Q(sqrt(-5))", primes, h1, kernels)
    Path(args.out).write_text(dumps_field(data), encoding="utf-8")
    print(f"h1 = {h1}; wrote {args.out}")


if __name__ == "__main__":
    main()
