from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from opsystk import opsys
from opsystk.errors import CapExceeded, MalformedInput
from opsystk.polyhedral import cone_rays, extreme_rays, rational_span


def as_set(rays):
    return {tuple(int(v) for v in r) for r in rays}


def unit_pair(n, i, j):
    v = [0] * n
    v[i] = v[j] = 1
    return tuple(v)


def test_w4_rays():
    assert as_set(extreme_rays(opsys.make_W(4))) == {unit_pair(4, i, j) for i in (0, 1) for j in (2, 3)}


def test_w6_rays():
    assert as_set(extreme_rays(opsys.make_W(6))) == {unit_pair(6, i, j) for i in range(3) for j in range(3, 6)}


def test_ell_rays():
    assert as_set(extreme_rays(opsys.ell_inf(3))) == {(1, 0, 0), (0, 1, 0), (0, 0, 1)}


def test_w23_rays():
    # averages of the two blocks agree: rays are 2 e_i + 3 e_j across the blocks
    want = set()
    for i in (0, 1):
        for j in (2, 3, 4):
            v = [0] * 5
            v[i], v[j] = 2, 3
            want.add(tuple(v))
    assert as_set(extreme_rays(opsys.make_W23())) == want


def test_cap_and_non_abelian():
    with pytest.raises(CapExceeded):
        extreme_rays(opsys.ell_inf(5), cap=4)
    with pytest.raises(MalformedInput):
        extreme_rays(opsys.full_algebra(2))


def test_irrational_span_rejected():
    with pytest.raises(MalformedInput):
        rational_span([[1.0, np.sqrt(2), 0.0]])


def test_rational_span_exact():
    rows, piv = rational_span([[1, 2, 3], [2, 4, 7]])
    assert piv == [0, 2]
    assert rows == [[Fraction(1), Fraction(2), Fraction(0)], [Fraction(0), Fraction(0), Fraction(1)]]


@given(st.lists(st.lists(st.integers(-3, 3), min_size=4, max_size=4), min_size=1, max_size=2))
def test_rays_are_extreme_and_generate(weights):
    w = np.array(weights, dtype=float)
    w[:, -1] = -w[:, :-1].sum(axis=1)
    s = opsys.function_system(w)
    rays = np.array(extreme_rays(s), dtype=float)
    d = np.real(np.diagonal(s.basis, axis1=1, axis2=2))
    for r in rays:
        assert r.min() >= 0
        assert np.linalg.matrix_rank(np.vstack([d, r])) == len(d)
        # extreme: vanishing on its zero set leaves a one-dimensional subspace
        zero = np.flatnonzero(r == 0)
        assert len(d) - np.linalg.matrix_rank(d[:, zero].T) == 1 if len(zero) else len(d) == 1
    rng = np.random.default_rng(0)
    for _ in range(5):
        v = rng.standard_normal(len(d)) @ d
        v = v + (0.1 - v.min())
        res = linprog(np.zeros(len(rays)), A_eq=rays.T, b_eq=v, bounds=[(0, None)] * len(rays), method="highs")
        assert res.status == 0


def test_cone_rays_two_dims():
    rows = [[Fraction(1), Fraction(0), Fraction(1)], [Fraction(0), Fraction(1), Fraction(-1)]]
    # {(a, b, a - b) : a, b, a - b >= 0} has rays (1, 0, 1) and (1, 1, 0)
    assert set(cone_rays(rows, [0, 1])) == {(1, 0, 1), (1, 1, 0)}
