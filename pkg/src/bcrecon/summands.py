"""Vectorized enumeration of direct summands with a bounded basis.

A rank-r direct summand of Z^s is determined by its primitive wedge (up to
sign). We enumerate all wedges ``v_1 ^ ... ^ v_r`` of box vectors with entries
in ``[-bound, bound]`` incrementally, deduplicating up to sign at every stage,
and keep the primitive ones. One representative basis is kept per wedge.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .exterior import subset_position, subsets


def box_array(s: int, bound: int) -> np.ndarray:
    """Nonzero vectors of the box up to sign (first nonzero entry positive)."""
    grids = np.stack(np.meshgrid(*[np.arange(-bound, bound + 1)] * s, indexing="ij"), -1)
    V = grids.reshape(-1, s)
    V = V[np.any(V != 0, axis=1)]
    first = V[np.arange(len(V)), np.argmax(V != 0, axis=1)]
    return V[first > 0].astype(np.int64)


def _wedge_tables(s: int, r: int):
    """Index/sign tables for ``w ^ v`` with w of degree r and v a vector."""
    out_sets = subsets(s, r + 1)
    pos = subset_position(s, r)
    idx = np.zeros((len(out_sets), r + 1), dtype=np.int64)
    sgn = np.zeros((len(out_sets), r + 1), dtype=np.int64)
    col = np.zeros((len(out_sets), r + 1), dtype=np.int64)
    for a, J in enumerate(out_sets):
        for b, j in enumerate(J):
            rest = tuple(i for i in J if i != j)
            idx[a, b] = pos[rest]
            sgn[a, b] = -1 if sum(1 for i in rest if i > j) % 2 else 1
            col[a, b] = j
    return idx, sgn, col


def wedge_with_vectors(W: np.ndarray, V: np.ndarray, s: int, r: int) -> np.ndarray:
    """All products ``W[i] ^ V[j]``, shape ``(len(W) * len(V), C(s, r+1))``."""
    idx, sgn, col = _wedge_tables(s, r)
    # (n, out, r+1) * (m, out, r+1) summed over the last axis
    Wg = W[:, idx] * sgn  # (n, out, r+1)
    Vg = V[:, col]  # (m, out, r+1)
    return np.einsum("nok,mok->nmo", Wg, Vg).reshape(-1, idx.shape[0])


def _normalize_sign(X: np.ndarray) -> np.ndarray:
    nz = X != 0
    has = nz.any(axis=1)
    first = X[np.arange(len(X)), np.argmax(nz, axis=1)]
    flip = np.where(first < 0, -1, 1)
    return X * flip[:, None], has


@lru_cache(maxsize=None)
def _all_wedges(s: int, bound: int, r: int):
    """All nonzero wedges of r box vectors up to sign, with one basis each.

    Returns ``(wedges, bases)`` where ``bases`` has shape ``(n, r, s)``.
    """
    box = box_array(s, bound)
    if r == 1:
        return box.copy(), box[:, None, :].copy()
    W, B = _all_wedges(s, bound, r - 1)
    chunks_w, chunks_b = [], []
    step = max(1, 400000 // len(box))
    for start in range(0, len(W), step):
        Wc = W[start:start + step]
        X = wedge_with_vectors(Wc, box, s, r - 1)
        X, has = _normalize_sign(X)
        parent = np.repeat(np.arange(start, start + len(Wc)), len(box))
        vec = np.tile(np.arange(len(box)), len(Wc))
        X, parent, vec = X[has], parent[has], vec[has]
        X, first = np.unique(X, axis=0, return_index=True)
        chunks_w.append(X)
        chunks_b.append(np.concatenate([B[parent[first]], box[vec[first]][:, None, :]], axis=1))
    X = np.concatenate(chunks_w)
    Bs = np.concatenate(chunks_b)
    X, first = np.unique(X, axis=0, return_index=True)
    return X, Bs[first]


def summand_wedges(s: int, r: int, bound: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Primitive wedges of rank-r summands with a basis in the box.

    Returns ``(wedges, bases)``: ``wedges[i]`` lists the coordinates of
    ``beta_Sigma`` in subset order, and ``bases[i]`` is an oriented basis with
    that wedge.
    """
    if r == s:
        # the only rank-s summand is Z^s itself
        return np.ones((1, 1), dtype=np.int64), np.eye(s, dtype=np.int64)[None]
    W, B = _all_wedges(s, bound, r)
    g = np.gcd.reduce(np.abs(W), axis=1)
    keep = g == 1
    return W[keep], B[keep]
