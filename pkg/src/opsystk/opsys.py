"""Finite-dimensional operator systems: matrix systems, quotients, duals.

Every system exposes the same small surface used by the tensor oracles:

* ``basis``: Hermitian matrices of shape ``(d, n, n)`` with ``basis[0]`` the
  unit (for quotients, the coset representative of the unit);
* a level-``m`` element is a coefficient stack ``c`` of shape ``(d, m, m)``
  (Hermitian blocks), meaning ``sum_p c_p (x) basis[p]`` in ``M_m (x) M_n``;
* ``margin(c)`` returns two-sided bounds on ``sup{t : c - t*unit >= 0}``
  and ``level_positive(c, tol)`` turns them into a :class:`Verdict`.

Duality uses the pairing ``<A, B> = tr(A^T B)/n`` on ``M_n`` (and its
restriction to the diagonal), under which ``M_n`` and ``l_n`` are completely
order isomorphic to their duals with unit ``tr/n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import linalg, sdp
from .errors import DualityMismatch, NotNull, UndecidedSpan

MEMBER = "MEMBER"
NON_MEMBER = "NON_MEMBER"
UNDECIDED = "UNDECIDED"

DEFAULT_TOL = 1e-7
DENSITY_TOL = 1e-8


@dataclass(frozen=True)
class Verdict:
    """Membership outcome with the evidence that supports it.

    ``lower``/``upper`` bound the unit-normalized margin. ``grounded`` is
    true when the answer rests on an exact certificate rather than a
    truncated search.
    """

    status: str
    grounded: bool = True
    lower: float = float("nan")
    upper: float = float("nan")
    route: str = ""
    certificate: dict = field(default_factory=dict, compare=False)

    @property
    def member(self):
        return self.status == MEMBER


def verdict_from_bounds(res, tol, route, grounded=True, scale=1.0):
    """Classify an :class:`sdp.LmiResult` (bounds multiplied by ``scale``)."""
    lower = res.lower * scale
    upper = res.upper * scale
    if res.status == "UNBOUNDED" or lower >= -tol:
        return Verdict(MEMBER, grounded, lower, upper, route, {"coeffs": res.y, "lambda_min": lower})
    if res.density is not None and upper < -tol and linalg.lambda_min(res.density) >= -DENSITY_TOL:
        return Verdict(NON_MEMBER, grounded, lower, upper, route, {"density": res.density, "value": upper})
    return Verdict(UNDECIDED, False, lower, upper, route, {"status": res.status})


def _level(coeffs, d):
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim == 1:
        c = c.reshape(d, 1, 1)
    if c.ndim != 3 or c.shape[0] != d or c.shape[1] != c.shape[2]:
        raise ValueError(f"expected coefficients of shape ({d}, m, m), got {c.shape}")
    return 0.5 * (c + np.conj(np.swapaxes(c, 1, 2)))


def kron_sum(coeffs, basis):
    """``sum_p coeffs[p] (x) basis[p]`` with the coefficient (level) factor first."""
    c = np.asarray(coeffs)
    b = np.asarray(basis)
    m, n = c.shape[1], b.shape[1]
    return np.einsum("pij,pab->iajb", c, b).reshape(m * n, m * n)


def _exact_margin(h):
    w, u = np.linalg.eigh(linalg.herm(h, check=False))
    v = u[:, 0]
    return sdp.LmiResult(status=sdp.OPTIMAL, value=float(w[0]), y=np.zeros(0),
                         density=np.outer(v, v.conj()), upper=float(w[0]), lower=float(w[0]))


def _parent_basis(n, parent):
    if parent == "full":
        return linalg.herm_basis(n)
    if parent == "diag":
        out = np.zeros((n, n, n), dtype=complex)
        out[np.arange(n), np.arange(n), np.arange(n)] = 1.0
        return out
    raise ValueError(f"unknown parent {parent!r}")


def _complement_in(span, n, parent):
    """Orthonormal complement of ``span`` inside the parent's Hermitian part."""
    if parent == "full":
        return linalg.complement(span, n)
    diag = _parent_basis(n, "diag")
    if len(span) == 0:
        return diag
    vecs = np.real(np.diagonal(np.asarray(span), axis1=1, axis2=2))
    q, _ = np.linalg.qr(vecs.T)
    rank = np.linalg.matrix_rank(vecs, tol=linalg.RANK_TOL * max(1.0, np.abs(vecs).max()))
    u, _, _ = np.linalg.svd(np.eye(n) - q[:, :rank] @ q[:, :rank].T)
    cols = u[:, :n - rank]
    out = np.zeros((n - rank, n, n), dtype=complex)
    for i, c in enumerate(cols.T):
        out[i] = np.diag(c)
    return out


def _unit_first(n, elems, parent="full"):
    """Basis ``[I] + orthonormal basis of span(elems) minus I``."""
    eye = np.eye(n, dtype=complex)
    rest = [linalg.herm(e, check=False) for e in elems]
    q = linalg.orthonormalize([eye / np.sqrt(n)] + rest)
    return np.concatenate([eye[None], q[1:]], axis=0)


class MatrixSystem:
    """Unital self-adjoint subspace of ``M_n`` with its inherited matrix cones."""

    kind = "matrix_system"

    def __init__(self, n, basis, name=""):
        basis = np.asarray(basis, dtype=complex)
        self.n = int(n)
        if basis.ndim != 3 or basis.shape[1:] != (self.n, self.n):
            raise ValueError("basis must have shape (d, n, n)")
        if not np.allclose(basis[0], np.eye(self.n), atol=1e-12):
            raise ValueError("basis[0] must be the identity")
        for b in basis:
            linalg.herm(b)
        if len(linalg.orthonormalize(basis)) != len(basis):
            raise ValueError("basis elements are linearly dependent")
        self.basis = basis
        self.name = name
        off = basis - np.einsum("pii,ij->pij", basis, np.eye(self.n))
        self.abelian = bool(np.max(np.abs(off), initial=0.0) <= 1e-12)
        self._gram = linalg.inner(basis[:, None], basis[None])

    def __repr__(self):
        return f"MatrixSystem(name={self.name!r}, n={self.n}, dim={self.dim}, abelian={self.abelian})"

    @property
    def dim(self):
        return len(self.basis)

    @property
    def parent(self):
        return "diag" if self.abelian else "full"

    @property
    def is_full(self):
        """True for all of ``M_n`` or, when abelian, all of ``l_n``."""
        return self.dim == (self.n if self.abelian else self.n * self.n)

    def unit_coords(self):
        u = np.zeros(self.dim)
        u[0] = 1.0
        return u

    def element(self, coeffs):
        return kron_sum(_level(coeffs, self.dim), self.basis)

    rep = element

    def coords(self, h):
        """Coefficients of ``h`` (shape ``(..., n, n)``) against the basis."""
        return linalg.coords(h, self.basis)

    def residual(self, h):
        h = np.asarray(h, dtype=complex)
        c = self.coords(h)
        diff = h - np.tensordot(c, self.basis, axes=([-1], [0]))
        return float(np.max(np.abs(diff), initial=0.0))

    def contains(self, h, tol=1e-9):
        return self.residual(h) <= tol * (1.0 + float(np.max(np.abs(h), initial=0.0)))

    def complement(self):
        """Orthonormal complement of the system inside its parent algebra."""
        return _complement_in(self.basis, self.n, self.parent)

    def margin(self, coeffs, cfg=None):
        return _exact_margin(self.element(coeffs))

    def level_positive(self, coeffs, tol=DEFAULT_TOL, cfg=None):
        return verdict_from_bounds(self.margin(coeffs), tol, "spatial")

    def random_element(self, rng, m=1):
        c = rng.standard_normal((self.dim, m, m)) + 1j * rng.standard_normal((self.dim, m, m))
        return 0.5 * (c + np.conj(np.swapaxes(c, 1, 2)))


class NullSubspace:
    """Self-adjoint subspace of ``M_n`` (or ``l_n``) without nonzero positives."""

    def __init__(self, n, basis, parent="full", certificate=None):
        self.n = int(n)
        self.parent = parent
        basis = np.asarray(basis, dtype=complex).reshape(-1, self.n, self.n)
        self.basis = linalg.orthonormalize(basis) if len(basis) else np.zeros((0, self.n, self.n), complex)
        self.certificate = certificate

    @property
    def dim(self):
        return len(self.basis)

    @property
    def traceless(self):
        return bool(np.all(np.abs(np.trace(self.basis, axis1=1, axis2=2)) <= 1e-10))


def is_null_subspace(n, span, tol=1e-8, cfg=sdp.SolverConfig()):
    """Decide whether ``span`` contains no nonzero positive element.

    Returns ``(is_null, certificate)``. A null span is certified by a
    positive definite ``h`` orthogonal to the span (every positive ``j`` in
    the span then has ``tr(h j) = 0``, forcing ``j = 0``); otherwise the
    certificate is a positive element of the span with unit trace.
    """
    span = np.asarray(span, dtype=complex).reshape(-1, n, n)
    if len(span) == 0:
        return True, {"separator": np.eye(n, dtype=complex)}
    q = linalg.orthonormalize(span)
    if len(q) == 0:
        return True, {"separator": np.eye(n, dtype=complex)}
    comp = linalg.complement(q, n)
    # densities orthogonal to the complement are exactly the unit-trace elements of the span
    res = sdp.sup_lambda_min(np.zeros((n, n)), comp, cfg)
    if res.status == "UNBOUNDED":
        h = np.tensordot(res.y, comp, axes=1) if len(comp) else np.eye(n)
        h = 0.5 * (h + h.conj().T)
        w = linalg.lambda_min(h)
        if w > 0:
            return True, {"separator": h / w}
    if res.density is not None:
        j, _ = linalg.project_onto_span(res.density, q)
        j = j / np.real(np.trace(j))
        if linalg.lambda_min(j) >= -tol:
            return False, {"positive": j}
    raise NotNull("could not decide null-ness of the span", status=res.status)


class QuotientSystem:
    """``P/J`` for a parent ``P`` (``M_n`` or ``l_n``) and a null-subspace ``J``.

    Cosets are represented inside ``J^perp``; ``basis[0]`` is the projection
    of the identity, the rest an orthonormal basis of the remaining
    complement. Positivity is the Archimedean closure of the quotient cones:
    ``sup_{j in M_m(J)} lambda_min(rep + j) >= 0``.
    """

    kind = "quotient"

    def __init__(self, null: NullSubspace, name=""):
        self.null = null
        self.n = null.n
        self.parent = null.parent
        self.name = name
        n = self.n
        eye = np.eye(n, dtype=complex)
        comp = _complement_in(null.basis, n, self.parent)
        unit, _ = linalg.project_onto_span(eye, comp) if len(null.basis) else (eye, 0.0)
        if len(null.basis) == 0:
            unit = eye
        rest = linalg.orthonormalize([unit] + list(comp))[1:]
        self.basis = np.concatenate([unit[None], rest], axis=0)
        self.abelian = self.parent == "diag"

    def __repr__(self):
        return f"QuotientSystem(name={self.name!r}, n={self.n}, parent={self.parent}, dim={self.dim})"

    @property
    def dim(self):
        return len(self.basis)

    def unit_coords(self):
        u = np.zeros(self.dim)
        u[0] = 1.0
        return u

    def element(self, coeffs):
        return kron_sum(_level(coeffs, self.dim), self.basis)

    rep = element

    def coords(self, h):
        """Coset coordinates of parent elements ``h`` (shape ``(..., n, n)``)."""
        h = np.asarray(h, dtype=complex)
        if self.null.dim:
            c = linalg.inner(self.null.basis, h[..., None, :, :])
            h = h - np.tensordot(c, self.null.basis, axes=([-1], [0]))
        return linalg.coords(h, self.basis)

    def directions(self, m):
        """Basis of ``Herm(M_m) (x) J`` at level ``m``."""
        if self.null.dim == 0:
            return np.zeros((0, m * self.n, m * self.n), dtype=complex)
        e = linalg.herm_basis(m)
        out = np.einsum("tij,lab->tliajb", e, self.null.basis)
        return out.reshape(len(e) * self.null.dim, m * self.n, m * self.n)

    def margin(self, coeffs, cfg=sdp.SolverConfig()):
        c = _level(coeffs, self.dim)
        if self.null.dim == 0:
            return _exact_margin(self.element(c))
        if self.abelian and c.shape[1] == 1:
            return _lp_margin(np.real(np.diagonal(self.element(c))),
                              np.real(np.diagonal(self.null.basis, axis1=1, axis2=2)))
        return sdp.sup_lambda_min(self.element(c), self.directions(c.shape[1]), cfg)

    def level_positive(self, coeffs, tol=DEFAULT_TOL, cfg=sdp.SolverConfig()):
        route = "lp" if self.abelian and _level(coeffs, self.dim).shape[1] == 1 else "quotient-sdp"
        return verdict_from_bounds(self.margin(coeffs, cfg), tol, route)

    def random_element(self, rng, m=1):
        c = rng.standard_normal((self.dim, m, m)) + 1j * rng.standard_normal((self.dim, m, m))
        return 0.5 * (c + np.conj(np.swapaxes(c, 1, 2)))


def _lp_margin(x, jv):
    """``max t`` with ``x + sum y_l j_l >= t`` entrywise, plus a dual density."""
    n, k = len(x), len(jv)
    # variables (t, y); minimize -t subject to t - x_i - sum y_l j_l(i) <= 0
    a = np.hstack([np.ones((n, 1)), -jv.T])
    res = linprog(c=np.concatenate([[-1.0], np.zeros(k)]), A_ub=a, b_ub=x,
                  bounds=[(None, None)] * (k + 1), method="highs")
    if res.status == 3:
        return sdp.LmiResult(status="UNBOUNDED", value=float("inf"), y=np.zeros(k), density=None,
                             upper=float("inf"), lower=float("inf"))
    if res.status != 0:
        return sdp.LmiResult(status=sdp.STALLED, value=float("nan"), y=np.zeros(k), density=None,
                             upper=float("inf"), lower=-float("inf"))
    y = res.x[1:]
    lower = float(np.min(x + y @ jv))
    w = np.maximum(-res.ineqlin.marginals, 0.0)
    # project the dual weights off J and renormalize
    if k:
        coef, *_ = np.linalg.lstsq(jv.T, w, rcond=None)
        w = w - jv.T @ coef
    w = w / w.sum() if w.sum() > 0 else np.full(n, 1.0 / n)
    return sdp.LmiResult(status=sdp.OPTIMAL, value=lower, y=y, density=np.diag(w).astype(complex),
                         upper=float(w @ x), lower=lower)


def choi_lmi(system, images, parent=None):
    """Choi-extension data for a Hermitian-preserving map on ``system``.

    ``images[p]`` is the image of ``basis[p]`` in ``M_N``. Returns
    ``(M0, directions)`` with ``M0 = sum (G^-1)_{qr} B_q^T (x) images[r]`` and
    directions ``N_l^T (x) E_t`` over the system's complement ``N`` in its
    parent and a Hermitian basis ``E`` of ``M_N``. The map is completely
    positive iff ``sup lambda_min(M0 + directions)`` is nonnegative.
    """
    images = np.asarray(images, dtype=complex)
    nt = images.shape[1]
    ginv = np.linalg.inv(linalg.inner(system.basis[:, None], system.basis[None]))
    dual = np.tensordot(ginv, system.basis, axes=1)
    m0 = np.einsum("pab,pij->aibj", np.swapaxes(dual, 1, 2), images).reshape(system.n * nt, system.n * nt)
    comp = _complement_in(system.basis, system.n, parent or system.parent)
    if len(comp) == 0:
        return m0, np.zeros((0, system.n * nt, system.n * nt), dtype=complex)
    e = linalg.herm_basis(nt)
    dirs = np.einsum("lba,tij->ltaibj", comp, e).reshape(len(comp) * len(e), system.n * nt, system.n * nt)
    return m0, dirs


class DualSystem:
    """The dual ``S*`` of a matrix system: functionals ordered by complete positivity.

    A level-``m`` element is the stack ``F_p = (f_ij(B_p))``; it is positive
    iff ``B_p -> F_p`` is completely positive. The unit is ``tr/n``.
    """

    kind = "dual"

    def __init__(self, system: MatrixSystem, name=""):
        if not isinstance(system, MatrixSystem):
            raise TypeError("DualSystem is defined for matrix systems")
        self.system = system
        self.name = name or f"dual({system.name})"

    @property
    def dim(self):
        return self.system.dim

    @property
    def n(self):
        return self.system.n

    def unit_coords(self):
        return np.real(np.trace(self.system.basis, axis1=1, axis2=2)) / self.system.n

    def margin(self, coeffs, cfg=sdp.SolverConfig()):
        c = _level(coeffs, self.dim)
        m0, dirs = choi_lmi(self.system, c)
        if len(dirs) == 0:
            res = _exact_margin(m0)
        else:
            res = sdp.sup_lambda_min(m0, dirs, cfg)
        # the unit's Choi matrix is I/n, so rescale to unit-normalized margins
        n = self.system.n
        return sdp.LmiResult(status=res.status, value=res.value * n, y=res.y, density=res.density,
                             upper=res.upper * n, lower=res.lower * n)

    def level_positive(self, coeffs, tol=DEFAULT_TOL, cfg=sdp.SolverConfig()):
        return verdict_from_bounds(self.margin(coeffs, cfg), tol, "choi")

    def random_element(self, rng, m=1):
        return self.system.random_element(rng, m)


@dataclass
class Functional:
    """Linear functional on ``system`` given by its values on the basis."""

    system: object
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex).reshape(self.system.dim)

    @property
    def self_adjoint(self):
        return bool(np.max(np.abs(self.coeffs.imag), initial=0.0) <= 1e-12)

    def __call__(self, x):
        return complex(self.coeffs @ np.asarray(x, dtype=complex))

    def adjoint(self):
        # f*(s) = conj f(s*) and the basis is Hermitian
        return Functional(self.system, np.conj(self.coeffs))


# -- constructors --------------------------------------------------------------

def make_matrix_system(n, generators=(), name=""):
    """Operator system spanned by the identity, the generators and their adjoints."""
    parts = []
    for g in generators:
        g = np.asarray(g, dtype=complex).reshape(n, n)
        parts.append(0.5 * (g + g.conj().T))
        parts.append(-0.5j * (g - g.conj().T))
    parts = [p for p in parts if np.max(np.abs(p), initial=0.0) > 0]
    return MatrixSystem(n, _unit_first(n, parts), name=name)


def full_algebra(n):
    return MatrixSystem(n, _unit_first(n, linalg.herm_basis(n)), name=f"M{n}")


def ell_inf(n):
    return MatrixSystem(n, _unit_first(n, _parent_basis(n, "diag")), name=f"l{n}")


def scalars():
    return MatrixSystem(1, np.ones((1, 1, 1), dtype=complex), name="C")


def function_system(weights, name=""):
    """Diagonal system ``{a : W a = 0}``; the constant vector must satisfy it."""
    w = np.atleast_2d(np.asarray(weights, dtype=float))
    n = w.shape[1]
    if np.max(np.abs(w.sum(axis=1)), initial=0.0) > 1e-12:
        raise ValueError("constraint rows must vanish on the unit")
    _, s, vt = np.linalg.svd(w)
    rank = int(np.sum(s > 1e-12 * max(1.0, s.max(initial=0.0))))
    kernel = vt[rank:]
    elems = [np.diag(v).astype(complex) for v in kernel]
    sys = MatrixSystem(n, _unit_first(n, elems), name=name)
    sys.weights = w
    return sys


def make_W(two_n):
    """Diagonal system with ``a_1 + ... + a_n = a_{n+1} + ... + a_{2n}``."""
    if two_n < 2 or two_n % 2:
        raise ValueError("W needs an even size >= 2")
    h = two_n // 2
    return function_system([[1.0] * h + [-1.0] * h], name=f"W{two_n}")


def make_W23():
    """Diagonal system in ``M_5`` with ``3(a_1 + a_2) = 2(a_3 + a_4 + a_5)``."""
    return function_system([[3.0, 3.0, -2.0, -2.0, -2.0]], name="W23")


def make_quotient(n, null, parent="full", name="", check=True, tol=1e-8):
    """``M_n/J`` (or ``l_n/J``); raises NOT_NULL if ``J`` has a positive element."""
    if not isinstance(null, NullSubspace):
        null = NullSubspace(n, null, parent)
    if parent == "diag":
        off = null.basis - np.einsum("pii,ij->pij", null.basis, np.eye(n))
        if np.max(np.abs(off), initial=0.0) > 1e-12:
            raise ValueError("a null-subspace of l_n must be diagonal")
    if check:
        ok, cert = is_null_subspace(n, null.basis, tol)
        if not ok:
            raise NotNull("the subspace contains a nonzero positive element", positive=cert["positive"])
        null.certificate = cert
    return QuotientSystem(null, name=name)


def j6():
    """``l_6 / span{(1,1,1,-1,-1,-1)}``."""
    j = np.diag([1.0, 1.0, 1.0, -1.0, -1.0, -1.0]).astype(complex)
    return make_quotient(6, [j], parent="diag", name="l6/J")


def random_matrix_system(rng, n, dim, name=""):
    gens = [linalg.random_hermitian(rng, n) for _ in range(max(dim - 1, 0))]
    sys = make_matrix_system(n, gens, name=name or f"rand{n}x{dim}")
    return sys


def random_null(rng, n, k, parent="full", traceless=True, tries=50):
    """Random ``k``-dimensional null-subspace; traceless ones are null automatically."""
    for _ in range(tries):
        if parent == "full":
            mats = [linalg.random_hermitian(rng, n) for _ in range(k)]
        else:
            mats = [np.diag(rng.standard_normal(n)).astype(complex) for _ in range(k)]
        if traceless:
            mats = [m - np.trace(m).real / n * np.eye(n) for m in mats]
        ok, cert = is_null_subspace(n, mats)
        if ok:
            return NullSubspace(n, mats, parent, certificate=cert)
    raise NotNull("no null-subspace found", n=n, k=k)


def random_quotient(rng, n, k, parent="full", traceless=True, name=""):
    null = random_null(rng, n, k, parent, traceless)
    return QuotientSystem(null, name=name or f"{'M' if parent == 'full' else 'l'}{n}/J{k}")


# -- duality -------------------------------------------------------------------

def functional_to_coset_map(r: MatrixSystem, q: QuotientSystem):
    """Coordinates map ``R* -> P/J``: the functional with values ``f(A_p)``
    goes to the coset ``b`` with ``tr(A_p^T b)/n = f(A_p)``."""
    k = linalg.inner(np.conj(r.basis)[:, None], q.basis[None]) / r.n
    return np.linalg.inv(k)


def dual_of_matrix_system(r: MatrixSystem, check=True, samples=20, seed=0, tol=DEFAULT_TOL):
    """``R* = P/J`` with ``J = {b in P : tr(A^T b) = 0 for all A in R}``.

    ``P`` is ``l_n`` for abelian ``R`` and ``M_n`` otherwise. With ``check``
    the result is compared against the functional cones of ``R*`` on sampled
    boundary elements.
    """
    parent = r.parent
    comp = _complement_in(np.conj(r.basis), r.n, parent)
    null = NullSubspace(r.n, comp, parent, certificate={"separator": np.eye(r.n)})
    q = QuotientSystem(null, name=f"dual({r.name})")
    if check:
        lmap = functional_to_coset_map(r, q)
        if not iso_check(DualSystem(r), q, lmap, levels=[1], samples=samples, tol=tol, seed=seed):
            raise DualityMismatch("functional cones disagree with the quotient cones", system=r.name)
    return q


def dual_of_quotient(q: QuotientSystem, cfg=sdp.SolverConfig()):
    """``(P/J)*`` realized inside ``M_n``: the annihilator of ``J`` under the pairing.

    If every element of ``J`` is traceless the identity already lies in the
    annihilator. Otherwise a positive definite unit ``U`` of trace ``n`` with
    the largest smallest eigenvalue is chosen and the system is moved by the
    congruence ``U^{-1/2} (.) U^{-1/2}``; the congruence is kept on the result.
    """
    n = q.n
    raw = np.conj(q.basis)
    if q.null.traceless:
        out = MatrixSystem(n, _unit_first(n, list(raw)), name=f"dual({q.name})")
        out.congruence = np.eye(n, dtype=complex)
        return out
    tr = np.real(np.trace(raw, axis1=1, axis2=2))
    u0 = raw[0] * (n / tr[0])
    # traceless directions inside the annihilator
    _, s, vt = np.linalg.svd(tr[None])
    null_coef = vt[1:]
    dirs = np.tensordot(null_coef, raw, axes=1)
    res = sdp.sup_lambda_min(u0, dirs, cfg) if len(dirs) else _exact_margin(u0)
    u = u0 + (np.tensordot(res.y, dirs, axes=1) if len(dirs) else 0)
    u = linalg.herm(u, check=False)
    w, v = np.linalg.eigh(u)
    if w[0] <= 0:
        raise NotNull("the annihilator has no positive definite element", lambda_min=float(w[0]))
    winv = v @ np.diag(w ** -0.5) @ v.conj().T
    moved = [winv @ b @ winv for b in raw]
    out = MatrixSystem(n, _unit_first(n, moved), name=f"dual({q.name})")
    out.congruence = winv
    return out


# -- Effros systems --------------------------------------------------------------

@dataclass
class EffrosSystem:
    """Span of positive functionals dominated by the state ``base``, with unit ``base``."""

    base: Functional
    span_basis: list
    certificates: list
    seed: int = 0
    rounds: int = 0

    @property
    def dim(self):
        return len(self.span_basis)


def _dominated_extreme(system, f, v, cfg):
    """Maximize ``<v, g>`` over ``0 <= g <= f``; returns ``(g, rho, sigma)``."""
    n, b = system.n, system.basis
    cons_r = b
    p = sdp.SdpProblem(blocks=[(n, sdp.PSD), (n, sdp.PSD)],
                       objective=[-np.tensordot(v, b, axes=1), np.zeros((n, n))],
                       constraints=[cons_r, cons_r], rhs=np.real(f))
    sol = sdp.solve(p, cfg)
    if sol.status != sdp.OPTIMAL:
        return None
    rho, sigma = sol.primal
    g = linalg.inner(b, rho[None])
    return g, rho, sigma


def effros_system(f: Functional, seed=0, tol=1e-7, max_rounds=60, patience=3, cfg=sdp.SolverConfig()):
    """Span of ``{g : 0 <= g <= f}`` found by random extreme points, then certified.

    Certification maximizes ``|<g, w>|`` over the dominated set for every
    direction ``w`` orthogonal to the span found so far; any violation
    enlarges the span. Exhausting ``max_rounds`` raises UNDECIDED_SPAN.
    """
    system = f.system
    if not f.self_adjoint:
        raise ValueError("the base functional must be self-adjoint")
    fv = np.real(f.coeffs)
    if abs(fv[0] - 1.0) > 1e-9:
        raise ValueError("the base functional must be unital")
    rng = np.random.default_rng(seed)
    d = system.dim
    found = [fv]
    certs = [{"rho": None, "sigma": None, "g": fv}]
    stable = 0
    rounds = 0

    def rank_of(vs):
        return np.linalg.matrix_rank(np.array(vs), tol=1e-6)

    while rounds < max_rounds:
        rounds += 1
        v = rng.standard_normal(d)
        before = rank_of(found)
        for sgn in (1.0, -1.0):
            out = _dominated_extreme(system, fv, sgn * v, cfg)
            if out is not None:
                found.append(out[0])
                certs.append({"g": out[0], "rho": out[1], "sigma": out[2]})
        stable = stable + 1 if rank_of(found) == before else 0
        if stable < patience and rank_of(found) < d:
            continue
        # certify: nothing dominated sticks out of the span
        span = _orth_rows(np.array(found))
        comp = _orth_complement_rows(span, d)
        grew = False
        for w in comp:
            for sgn in (1.0, -1.0):
                out = _dominated_extreme(system, fv, sgn * w, cfg)
                if out is not None and abs(out[0] @ w) > tol:
                    found.append(out[0])
                    certs.append({"g": out[0], "rho": out[1], "sigma": out[2]})
                    grew = True
        if not grew:
            keep = _independent_subset(found)
            basis = [Functional(system, found[i]) for i in keep]
            return EffrosSystem(base=f, span_basis=basis, certificates=[certs[i] for i in keep],
                                seed=seed, rounds=rounds)
        stable = 0
    raise UndecidedSpan("span did not stabilize", rounds=rounds)


def _orth_rows(vs):
    u, s, vt = np.linalg.svd(vs, full_matrices=False)
    r = int(np.sum(s > 1e-6 * max(1.0, s[0])))
    return vt[:r]


def _orth_complement_rows(rows, d):
    if len(rows) == 0:
        return np.eye(d)
    _, s, vt = np.linalg.svd(rows)
    return vt[len(rows):]


def _independent_subset(vs):
    keep, acc = [], []
    for i, v in enumerate(vs):
        trial = acc + [v]
        if np.linalg.matrix_rank(np.array(trial), tol=1e-6) == len(trial):
            keep.append(i)
            acc = trial
    return keep


def check_effros_certificate(e: EffrosSystem, tol=1e-6):
    """Re-check that every basis functional is dominated: ``g = tr(rho .)``,
    ``f - g = tr(sigma .)`` with ``rho, sigma >= 0``."""
    b = e.base.system.basis
    fv = np.real(e.base.coeffs)
    for cert in e.certificates:
        if cert["rho"] is None:
            continue
        if linalg.lambda_min(cert["rho"]) < -tol or linalg.lambda_min(cert["sigma"]) < -tol:
            return False
        g = linalg.inner(b, cert["rho"][None])
        h = linalg.inner(b, cert["sigma"][None])
        if np.max(np.abs(g - cert["g"])) > tol or np.max(np.abs(g + h - fv)) > tol:
            return False
    return True


# -- isomorphism checks ----------------------------------------------------------

def boundary_shift(system, coeffs, delta, cfg=sdp.SolverConfig()):
    """Move ``coeffs`` along the unit so that its margin becomes ``delta``."""
    c = _level(coeffs, system.dim)
    res = system.margin(c, cfg)
    t = res.value if np.isfinite(res.value) else res.lower
    u = np.asarray(system.unit_coords(), dtype=float)
    m = c.shape[1]
    return c + (delta - t) * u[:, None, None] * np.eye(m)[None]


def apply_map(lmap, coeffs):
    return np.tensordot(np.asarray(lmap), coeffs, axes=([1], [0]))


def iso_check(a, b, lmap, levels=(1,), samples=10, tol=DEFAULT_TOL, seed=0, details=False):
    """Sampled check that the coordinate map ``lmap: A -> B`` is a unital complete order isomorphism.

    Elements are drawn at random, moved close to the boundary of the source
    cone (margin ``+-10^U(-4,-1)``), and their verdicts compared on both
    sides, in both directions.
    """
    lmap = np.asarray(lmap, dtype=float)
    info = {"unital": False, "checked": 0, "mismatches": []}
    if lmap.shape != (b.dim, a.dim):
        return (False, info) if details else False
    ua, ub = np.asarray(a.unit_coords(), float), np.asarray(b.unit_coords(), float)
    unital = np.max(np.abs(lmap @ ua - ub)) <= 1e-8 * (1.0 + np.max(np.abs(ub)))
    info["unital"] = bool(unital)
    if not unital or abs(np.linalg.det(lmap)) < 1e-12:
        return (False, info) if details else False
    inv = np.linalg.inv(lmap)
    rng = np.random.default_rng(seed)
    ok = True
    for m in levels:
        for s in range(samples):
            for src, dst, fwd in ((a, b, lmap), (b, a, inv)):
                x = src.random_element(rng, m)
                delta = float(rng.choice([-1.0, 1.0]) * 10.0 ** rng.uniform(-4, -1))
                x = boundary_shift(src, x, delta)
                va = src.level_positive(x, tol)
                vb = dst.level_positive(apply_map(fwd, x), tol)
                info["checked"] += 1
                if va.status != vb.status or va.status == UNDECIDED:
                    ok = False
                    info["mismatches"].append({"level": m, "sample": s, "delta": delta,
                                               "source": va.status, "target": vb.status})
    return (ok, info) if details else ok


def fp_map(system: MatrixSystem):
    """Coordinates of ``A -> tr(A^T .)/n`` from ``system`` into ``DualSystem(system)``."""
    b = system.basis
    return linalg.inner(np.conj(b)[None], b[:, None]) / system.n


def level_positive(system, coeffs, tol=DEFAULT_TOL, cfg=sdp.SolverConfig()):
    return system.level_positive(coeffs, tol, cfg) if not isinstance(system, MatrixSystem) \
        else system.level_positive(coeffs, tol)
