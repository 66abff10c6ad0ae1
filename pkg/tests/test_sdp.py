import numpy as np
import pytest
from hypothesis import given, strategies as st

from opsystk import linalg, sdp


def rel_gap(sol):
    return abs(sol.primal_objective - sol.dual_objective) / (
        1.0 + abs(sol.primal_objective) + abs(sol.dual_objective))


@given(st.integers(0, 10**6), st.lists(st.integers(1, 6), min_size=1, max_size=3), st.booleans())
def test_planted_optimum(seed, dims, with_free):
    sizes = [(d, sdp.PSD) for d in dims] + ([(2, sdp.FREE)] if with_free else [])
    p, opt = sdp.plant_instance(seed, sizes)
    sol = sdp.solve(p)
    assert sol.status == sdp.OPTIMAL
    assert sdp.verify_certificate(p, sol)
    assert sol.primal_objective == pytest.approx(opt, rel=1e-6, abs=1e-6)
    assert rel_gap(sol) <= 1e-6


def test_degenerate_planted():
    for seed in range(5):
        p, opt = sdp.plant_instance(seed, [(4, sdp.PSD), (3, sdp.PSD)], degenerate=True)
        sol = sdp.solve(p)
        assert sdp.verify_certificate(p, sol)
        assert sol.primal_objective == pytest.approx(opt, abs=1e-6)


def test_hand_solved_eigenvalue_problem():
    # min <C, X> with tr X = 1 is the smallest eigenvalue of C
    c = np.diag([3.0, 1.0, 2.0])
    p = sdp.SdpProblem(blocks=[(3, sdp.PSD)], objective=[c], constraints=[np.eye(3)[None]], rhs=[1.0])
    sol = sdp.solve(p)
    assert sol.status == sdp.OPTIMAL
    assert sol.primal_objective == pytest.approx(1.0, abs=1e-7)
    assert sol.dual[0] == pytest.approx(1.0, abs=1e-7)


def test_max_sense_flips():
    c = np.diag([3.0, 1.0, 2.0])
    p = sdp.SdpProblem(blocks=[(3, sdp.PSD)], objective=[c], constraints=[np.eye(3)[None]], rhs=[1.0],
                       sense="MAX")
    sol = sdp.solve(p)
    assert sol.primal_objective == pytest.approx(3.0, abs=1e-7)
    assert sdp.verify_certificate(p, sol)


def test_primal_infeasible_certificate():
    # X_11 = -1 has no PSD solution
    p = sdp.SdpProblem(blocks=[(2, sdp.PSD)], objective=[np.eye(2)],
                       constraints=[np.array([np.diag([1.0, 0.0])])], rhs=[-1.0])
    sol = sdp.solve(p)
    assert sol.status == sdp.PRIMAL_INFEASIBLE
    assert sdp.verify_certificate(p, sol)


def test_inconsistent_duplicate_rows():
    a = np.eye(2)[None]
    p = sdp.SdpProblem(blocks=[(2, sdp.PSD)], objective=[np.eye(2)], constraints=[np.concatenate([a, a])],
                       rhs=[1.0, 2.0])
    sol = sdp.solve(p)
    assert sol.status == sdp.PRIMAL_INFEASIBLE
    assert sdp.verify_certificate(p, sol)


def test_dual_infeasible_certificate():
    # minimize -X_11 subject to X_22 = 1: unbounded below
    p = sdp.SdpProblem(blocks=[(2, sdp.PSD)], objective=[np.diag([-1.0, 0.0])],
                       constraints=[np.array([np.diag([0.0, 1.0])])], rhs=[1.0])
    sol = sdp.solve(p)
    assert sol.status == sdp.DUAL_INFEASIBLE
    assert sdp.verify_certificate(p, sol)


def test_complex_block():
    # min <C, X>, tr X = 1 with C = Pauli Y: optimum -1
    y = np.array([[0, -1j], [1j, 0]])
    p = sdp.SdpProblem(blocks=[(2, sdp.PSD)], objective=[y], constraints=[np.eye(2)[None]], rhs=[1.0])
    sol = sdp.solve(p)
    assert sol.primal_objective == pytest.approx(-1.0, abs=1e-7)
    assert np.iscomplexobj(sol.primal[0])


def test_dump_triplets_header():
    p, _ = sdp.plant_instance(0, [(2, sdp.PSD), (1, sdp.FREE)], n_constraints=2)
    text = sdp.dump_triplets(p)
    assert text.startswith("sense MIN\nblocks 2:PSD 1:FREE\nc\n")
    assert text.count("\na ") == 2


def test_bad_inputs_rejected():
    with pytest.raises(ValueError):
        sdp.SdpProblem(blocks=[(2, "CONE")], objective=[np.eye(2)], constraints=[np.eye(2)[None]], rhs=[1.0])
    with pytest.raises(ValueError):
        sdp.SdpProblem(blocks=[(2, sdp.PSD)], objective=[np.eye(2)], constraints=[np.eye(2)[None]],
                       rhs=[np.inf])


@given(st.integers(0, 10**6), st.integers(2, 4), st.integers(0, 6))
def test_sup_lambda_min_forms_agree(seed, n, k):
    rng = np.random.default_rng(seed)
    m0 = linalg.random_hermitian(rng, n)
    g = np.array([linalg.random_hermitian(rng, n) - 0 * np.eye(n) for _ in range(k)]).reshape(k, n, n)
    # traceless directions keep the problem bounded
    g = g - np.einsum("k,ij->kij", np.real(np.trace(g, axis1=1, axis2=2)) / n, np.eye(n))
    a = sdp.sup_lambda_min(m0, g, form="direct")
    b = sdp.sup_lambda_min(m0, g, form="complement")
    assert a.lower <= a.upper + 1e-7
    assert a.value == pytest.approx(b.value, abs=1e-6)
    # certificates: the density is PSD, trace one and orthogonal to the directions
    x = a.density
    assert linalg.lambda_min(x) >= -1e-8
    assert np.trace(x).real == pytest.approx(1.0)
    if k:
        np.testing.assert_allclose(linalg.inner(g, x[None]), 0, atol=1e-8)


def test_sup_lambda_min_unbounded():
    # the direction itself is positive definite
    res = sdp.sup_lambda_min(np.diag([-1.0, 0.0]), np.eye(2)[None])
    assert res.status == "UNBOUNDED"
    res = sdp.sup_lambda_min(np.diag([-1.0, 0.0]), np.eye(2)[None], form="complement")
    assert res.status == "UNBOUNDED"


def test_sup_lambda_min_boundary_direction():
    # diag(0, 1) is PSD but not definite, so the value stays finite
    res = sdp.sup_lambda_min(np.diag([-1.0, 0.0]), np.diag([0.0, 1.0])[None])
    assert res.status == sdp.OPTIMAL
    assert res.value == pytest.approx(-1.0, abs=1e-6)
