import numpy as np
import pytest
from hypothesis import given, strategies as st

from opsystk import linalg, opsys
from opsystk.errors import NotNull
from opsystk.opsys import MEMBER, NON_MEMBER

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)


def test_builtin_dimensions():
    assert opsys.make_W(6).dim == 5
    assert opsys.make_W(4).dim == 3
    assert opsys.make_W(2).dim == 1
    assert opsys.make_W23().dim == 4
    assert opsys.make_matrix_system(2, [np.array([[0, 1], [0, 0]])]).dim == 3
    assert opsys.full_algebra(3).dim == 9
    assert opsys.ell_inf(5).abelian and opsys.ell_inf(5).is_full


def test_matrix_system_rejects_non_unital_basis():
    with pytest.raises(ValueError):
        opsys.MatrixSystem(2, [Z])


def test_matrix_levels_are_spatial():
    m2 = opsys.full_algebra(2)
    c = m2.coords(np.eye(2))
    assert m2.level_positive(c).status == MEMBER
    assert m2.level_positive(-c).status == NON_MEMBER


def test_null_subspace_examples():
    ok, cert = opsys.is_null_subspace(2, [X])
    assert ok and linalg.lambda_min(cert["separator"]) > 0
    ok, cert = opsys.is_null_subspace(2, [np.diag([1.0, 0.0])])
    assert not ok and linalg.lambda_min(cert["positive"]) >= -1e-8
    # diag(1, -2) spans no positive, diag(1, 2) does
    assert opsys.is_null_subspace(2, [np.diag([1.0, -2.0])])[0]
    assert not opsys.is_null_subspace(2, [np.diag([1.0, 2.0])])[0]
    with pytest.raises(NotNull):
        opsys.make_quotient(2, [np.eye(2)])


def test_j6_cones():
    q = opsys.j6()
    assert q.dim == 5
    two = q.coords(np.diag([2.0, 0, 0, 0, 0, 0]).astype(complex))
    assert q.level_positive(two).status == MEMBER
    neg = q.coords(np.diag([0, 0, 0, 0, 0, -1.0]).astype(complex))
    assert q.level_positive(neg).status == NON_MEMBER


def test_quotient_of_m2_by_x():
    q = opsys.make_quotient(2, [X])
    assert q.dim == 3
    u = q.unit_coords()
    assert q.level_positive(u).status == MEMBER
    assert q.level_positive(-u).status == NON_MEMBER
    # X itself is zero in the quotient, so tI + X is positive exactly when t >= 0
    c = q.coords(0.01 * np.eye(2) + 5 * X)
    assert q.level_positive(c).status == MEMBER


@given(st.integers(0, 10**6))
def test_unit_margin_shift(seed):
    rng = np.random.default_rng(seed)
    q = opsys.random_quotient(rng, 3, 2)
    c = q.random_element(rng, 2)
    m0 = q.margin(c).value
    shifted = c + 0.3 * q.unit_coords()[:, None, None] * np.eye(2)[None]
    assert q.margin(shifted).value == pytest.approx(m0 + 0.3, abs=1e-6)


def test_lp_and_sdp_quotient_margins_agree():
    rng = np.random.default_rng(7)
    q = opsys.random_quotient(rng, 4, 2, parent="diag")
    for _ in range(10):
        c = q.random_element(rng, 1)
        lp = q.margin(c)
        sd = opsys.sdp.sup_lambda_min(q.element(c), q.directions(1))
        assert lp.value == pytest.approx(sd.value, abs=1e-6)


def test_fp_map_identifies_mn_with_its_dual():
    for n in (2, 3):
        m = opsys.full_algebra(n)
        assert opsys.iso_check(m, opsys.DualSystem(m), opsys.fp_map(m), levels=(1, 2), samples=4)


def test_iso_check_detects_non_isomorphism():
    m2 = opsys.full_algebra(2)
    # transposition is an order isomorphism at level 1 but not at level 2
    t = np.real(m2.coords(np.transpose(m2.basis, (0, 2, 1)))).T
    assert opsys.iso_check(m2, m2, t, levels=(1,), samples=5)
    ok, info = opsys.iso_check(m2, m2, t, levels=(2,), samples=20, details=True)
    assert not ok and info["mismatches"]


def test_w6_dual_is_l6_mod_j():
    w6 = opsys.make_W(6)
    q = opsys.dual_of_matrix_system(w6, check=False)
    assert q.parent == "diag" and q.null.dim == 1
    j = np.real(np.diag(q.null.basis[0]))
    j = j / j[0]
    np.testing.assert_allclose(j, [1, 1, 1, -1, -1, -1], atol=1e-10)


def test_dual_round_trip_small():
    rng = np.random.default_rng(11)
    r = opsys.random_matrix_system(rng, 3, 4)
    q = opsys.dual_of_matrix_system(r)
    back = opsys.dual_of_quotient(q)
    lmap = np.real(back.coords(r.basis)).T
    assert opsys.iso_check(r, back, lmap, levels=(1, 2), samples=4)


def test_dual_of_quotient_m2_mod_x():
    back = opsys.dual_of_quotient(opsys.make_quotient(2, [X]))
    for m in (np.eye(2), Y, Z):
        assert back.contains(m)
    assert not back.contains(X)


def test_dual_of_non_traceless_quotient_is_congruent():
    q = opsys.make_quotient(2, [np.diag([1.0, -2.0])], parent="diag")
    d = opsys.dual_of_quotient(q)
    w = d.congruence
    # the raw annihilator moved by the congruence spans the result and contains I
    raw = np.conj(q.basis)
    for b in raw:
        assert d.contains(w @ b @ w)
    assert linalg.lambda_min(w) > 0


def test_effros_systems():
    m2 = opsys.full_algebra(2)
    f = opsys.Functional(m2, np.real(np.trace(m2.basis, axis1=1, axis2=2)) / 2)
    e = opsys.effros_system(f)
    assert e.dim == 4
    assert opsys.check_effros_certificate(e)
    l2 = opsys.ell_inf(2)
    # evaluation at a point dominates only its own multiples
    ev = opsys.Functional(l2, np.real(np.array([b[0, 0] for b in l2.basis])))
    assert opsys.effros_system(ev).dim == 1


def test_functional_adjoint():
    m2 = opsys.full_algebra(2)
    f = opsys.Functional(m2, [1, 1j, 0, 0])
    assert not f.self_adjoint
    np.testing.assert_allclose(f.adjoint().coeffs, [1, -1j, 0, 0])
