"""Brute-force reference computations used by the tests.

These deliberately avoid the library's own algorithms.
"""

import itertools
import math

import numpy as np


def all_permutations(n):
    return np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)


def _plus(x):
    return int(np.sum(np.asarray(x) > 0))


def exhaustive_reorder(outcomes):
    """Minimum discrepancy of each step over every row permutation.

    ``outcomes`` is (n, 8) in column order a1 b1 a2 bp2 ap3 b3 ap4 bp4.
    The three pair permutations range over all n! arrangements; each must
    leave as few disagreements as any arrangement can (the engine's
    "agree wherever possible").  The OI value is the smallest total
    within-class ap3/ap4 count gap reachable over all such choices.
    Returns (d_a, d_b, d_bp, d_oi).
    """
    o = np.asarray(outcomes, dtype=float)
    n = o.shape[0]
    a1, b1, a2, bp2, ap3, b3, ap4, bp4 = o.T
    perms = all_permutations(n)

    def best(target, moved):
        mism = (target[None, :] != moved[perms]).sum(axis=1)
        return mism.min(), perms[mism == mism.min()]

    d_a, p1s = best(a1, a2)
    d_b, p2s = best(b1, b3)
    A3 = ap3[p2s]
    d_bp = None
    d_oi = None
    for p1 in p1s:
        bp = bp2[p1]
        d3, p3s = best(bp, bp4)
        d_bp = d3 if d_bp is None else d_bp
        assert d3 == d_bp
        B4 = bp4[p3s]
        A4 = ap4[p3s]
        total = 0
        for v in (1.0, -1.0):
            mask = (B4 == v).astype(float)
            x = mask @ (A3 > 0).T.astype(float)           # plus count of ap3 inside the class
            y = (mask * (A4 > 0)).sum(axis=1)[:, None]    # plus count of ap4 inside the class
            total = total + np.abs(x - y)
        m = int(total.min())
        d_oi = m if d_oi is None else min(d_oi, m)
    return int(d_a), int(d_b), int(d_bp), int(d_oi)


def exact_conspiracy_p(outcomes, settings):
    """Exact permutation p-value over all n! orderings of the S column."""
    o = np.asarray(outcomes, dtype=float)
    s = np.asarray(settings)
    n = o.shape[0]
    prods = [o[:, 0] * o[:, 1], o[:, 2] * o[:, 3], o[:, 4] * o[:, 5], o[:, 6] * o[:, 7]]

    def stat(lab):
        gaps = []
        for k in range(4):
            sel = lab == k + 1
            gaps.append(abs(prods[k][sel].sum() / sel.sum() - prods[k].sum() / n))
        return max(gaps)

    observed = stat(s)
    hits = total = 0
    for p in itertools.permutations(range(n)):
        total += 1
        hits += stat(s[list(p)]) >= observed - 1e-12
    return hits / total


def singlet_chsh_grid(steps=48):
    """Largest |CHSH| of E(x, y) = -cos(x - y) over a grid of all four angles."""
    g = np.linspace(0, 2 * math.pi, steps, endpoint=False)
    a, ap, b, bp = np.meshgrid(g, g, g, g, indexing="ij", sparse=True)
    E = lambda x, y: -np.cos(x - y)
    return float(np.max(np.abs(E(a, bp) + E(ap, bp) + E(ap, b) - E(a, b))))


def chsh_by_counting(a, b, bp, ap):
    """Integer n * CHSH of a dichotomic joint table."""
    a, b, bp, ap = (np.asarray(c).astype(np.int64) for c in (a, b, bp, ap))
    return abs(int((a * bp).sum() + (bp * ap).sum() + (ap * b).sum() - (b * a).sum()))
