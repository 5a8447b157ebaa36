"""Brute-force LP oracle: enumerate candidate vertices, keep the best feasible.

Independent of the simplex code path on purpose: it solves n-by-n active-set
systems for every combination of facets and scans for the minimum objective.
Only usable for small LPs (everything here keeps the combination count low).
"""

from __future__ import annotations

import itertools

import numpy as np


def _facets(lp):
    """Rows (g, h, sense) with sense in {-1: g.x <= h, 0: =, +1: >=}."""
    n = lp.num_vars
    facets = []
    forced = []
    for con in lp.constraints:
        g = np.zeros(n)
        for i, c in con.coeffs:
            g[i] = c
        sense = {"<=": -1, "=": 0, ">=": 1}[con.relation]
        if sense == 0:
            forced.append((g, con.rhs))
        facets.append((g, con.rhs, sense))
    for i in range(n):
        g = np.zeros(n)
        g[i] = 1.0
        facets.append((g, lp.lower[i], 1))
        if lp.upper[i] is not None:
            facets.append((g, lp.upper[i], -1))
    return facets, forced


def vertex_enumeration_optimum(lp, tol: float = 1e-9):
    """Minimum objective over all vertices of the feasible region.

    Returns (value, x) or (None, None) when no feasible vertex exists.
    Equality rows are active in every candidate set.
    """
    n = lp.num_vars
    facets, forced = _facets(lp)
    c = lp.objective_vector()

    free = [i for i, f in enumerate(facets) if f[2] != 0]
    n_extra = n - len(forced)
    if n_extra < 0:
        raise ValueError("more equality rows than variables")

    combos = list(itertools.combinations(free, n_extra))
    if not combos:
        combos = [()]
    mats = np.empty((len(combos), n, n))
    rhss = np.empty((len(combos), n))
    for row, (g, h) in enumerate(forced):
        mats[:, row, :] = g
        rhss[:, row] = h
    base = len(forced)
    for ci, combo in enumerate(combos):
        for off, fi in enumerate(combo):
            g, h, _ = facets[fi]
            mats[ci, base + off, :] = g
            rhss[ci, base + off] = h

    dets = np.abs(np.linalg.det(mats))
    scale = np.abs(mats).max(axis=(1, 2)) + 1e-30
    usable = dets > 1e-10 * scale**n
    if not usable.any():
        return None, None
    points = np.linalg.solve(mats[usable], rhss[usable][..., None])[..., 0]

    best_val, best_x = None, None
    for x in points:
        ok = True
        for g, h, sense in facets:
            lhs = float(g @ x)
            if sense == -1 and lhs > h + tol:
                ok = False
                break
            if sense == 1 and lhs < h - tol:
                ok = False
                break
            if sense == 0 and abs(lhs - h) > tol:
                ok = False
                break
        if not ok:
            continue
        value = float(c @ x)
        if best_val is None or value < best_val:
            best_val, best_x = value, x
    return best_val, best_x


def random_bounded_lp(rng, max_vars: int = 12):
    """Feasible, bounded LP with a small enough facet count to enumerate."""
    from cachecraft.lp_core import LinearProgram

    n = int(rng.integers(2, max_vars + 1))
    m = 6
    while _comb(n + m + 1, n) > 6000 and m > 1:
        m -= 1
    a = rng.normal(size=(m, n))
    x0 = rng.uniform(0.1, 1.0, size=n)
    b = a @ x0 + rng.uniform(0.1, 1.0, size=m)
    c = rng.normal(size=n)

    lp = LinearProgram(num_vars=n)
    lp.set_objective({i: c[i] for i in range(n)})
    for r in range(m):
        lp.add_constraint([(i, a[r, i]) for i in range(n)], "<=", float(b[r]))
    # box the region so every objective stays bounded
    lp.add_constraint(
        [(i, 1.0) for i in range(n)], "<=", float(x0.sum() + rng.uniform(0.5, 2.0))
    )
    return lp


def _comb(n, k):
    import math

    return math.comb(n, k)
