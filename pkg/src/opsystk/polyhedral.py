"""Exact extreme rays of positive cones of function systems.

A function system ``S`` inside ``l_n`` has positive cone ``S`` intersected
with the nonnegative orthant. The rays are enumerated with the double
description method in rational arithmetic, so the output is exact whenever
the span of ``S`` is rational (which is checked).
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd

import numpy as np

from .errors import CapExceeded, MalformedInput

MAX_N = 12


def rational_span(vectors, max_den=1000, tol=1e-9):
    """Exact reduced row echelon basis of the span of real ``vectors``.

    Returns ``(rows, pivots)`` with ``rows`` a list of ``Fraction`` lists.
    Raises :class:`MalformedInput` when the span is not rational with
    denominators up to ``max_den``.
    """
    a = np.asarray(vectors, dtype=float)
    rank = np.linalg.matrix_rank(a, tol=tol * max(1.0, np.abs(a).max()))
    n = a.shape[1]
    # float RREF with partial pivoting, then round each entry
    m = a.copy()
    pivots, r = [], 0
    for c in range(n):
        if r == rank:
            break
        i = r + int(np.argmax(np.abs(m[r:, c])))
        if abs(m[i, c]) <= tol * max(1.0, np.abs(a).max()):
            continue
        m[[r, i]] = m[[i, r]]
        m[r] /= m[r, c]
        for j in range(len(m)):
            if j != r:
                m[j] -= m[j, c] * m[r]
        pivots.append(c)
        r += 1
    rows = [[Fraction(float(v)).limit_denominator(max_den) for v in m[i]] for i in range(rank)]
    approx = np.array([[float(v) for v in row] for row in rows])
    if np.max(np.abs(approx - m[:rank]), initial=0.0) > 1e-7:
        raise MalformedInput("span is not rational at the supported precision")
    return rows, pivots


def _primitive(vec):
    den = 1
    for v in vec:
        den = den * v.denominator // gcd(den, v.denominator)
    ints = [int(v * den) for v in vec]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    return tuple(v // g for v in ints) if g else tuple(ints)


def cone_rays(rows, pivots):
    """Rays of ``{x = z^T rows : x >= 0}`` as primitive integer vectors."""
    d = len(rows)
    n = len(rows[0])
    ineq = [[rows[k][i] for k in range(d)] for i in range(n)]
    # start from the simplicial cone cut out by the pivot coordinates (z >= 0)
    processed = list(pivots)
    rays = []
    for j in range(d):
        z = [Fraction(0)] * d
        z[j] = Fraction(1)
        rays.append(z)

    def tight(z, idx):
        return frozenset(i for i in idx if sum(ineq[i][k] * z[k] for k in range(d)) == 0)

    for i in range(n):
        if i in pivots:
            continue
        vals = [sum(ineq[i][k] * z[k] for k in range(d)) for z in rays]
        pos = [z for z, v in zip(rays, vals) if v > 0]
        zero = [z for z, v in zip(rays, vals) if v == 0]
        neg = [(z, v) for z, v in zip(rays, vals) if v < 0]
        posv = [(z, v) for z, v in zip(rays, vals) if v > 0]
        tsets = [tight(z, processed) for z in rays]
        new = []
        for zp, vp in posv:
            tp = tight(zp, processed)
            for zn, vn in neg:
                common = tp & tight(zn, processed)
                if len(common) < d - 2:
                    continue
                # combinatorial adjacency: no third ray is tight on all of common
                ok = True
                for z3, t3 in zip(rays, tsets):
                    if z3 is zp or z3 is zn:
                        continue
                    if common <= t3:
                        ok = False
                        break
                if ok:
                    new.append([vp * a - vn * b for a, b in zip(zn, zp)])
        rays = pos + zero + new
        processed.append(i)
    out = set()
    for z in rays:
        x = [sum(rows[k][c] * z[k] for k in range(d)) for c in range(n)]
        out.add(_primitive(x))
    return sorted(out, reverse=True)


def extreme_rays(system, cap=MAX_N):
    """Extreme rays of an abelian matrix system's cone, in ``R^n`` coordinates."""
    if not system.abelian:
        raise MalformedInput("extreme rays are only enumerated for function systems")
    if system.n > cap:
        raise CapExceeded(f"n = {system.n} exceeds the cap {cap}", n=system.n, cap=cap)
    diag = np.real(np.diagonal(system.basis, axis1=1, axis2=2))
    rows, pivots = rational_span(diag)
    return cone_rays(rows, pivots)
