"""Minimal and maximal tensor cones, complete positivity, extensions and lifts.

Grounding table (``Verdict.grounded`` is true only for exact certificates):

==========================  ============================  =============================
pair                        min cone                      max cone
==========================  ============================  =============================
matrix (x) matrix           spatial PSD test (exact)      = min if a side is nuclear
                                                          (full M_k or l_k); otherwise a
                                                          sandwich: min gives exact
                                                          NON_MEMBER, generator
                                                          decompositions give exact
                                                          MEMBER, else UNDECIDED
matrix (x) P/J              quotient cone of M_K(P/J)     lifts through S (x) P (exact)
                            (exact)
P1/J1 (x) P2/J2             sandwich: sampled ucp maps    lifts through P1 (x) P2 (exact)
                            give NON_MEMBER, a lift gives
                            MEMBER
==========================  ============================  =============================

Here ``P`` is ``M_n`` or ``l_n``; both are nuclear, which is what makes the
lifting descriptions exact. The level of an element is folded into the left
tensorand.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg, sdp
from .opsys import (DEFAULT_TOL, MEMBER, NON_MEMBER, UNDECIDED, MatrixSystem, QuotientSystem,
                    Verdict, _complement_in, _exact_margin, choi_lmi, kron_sum, verdict_from_bounds)

__all__ = ["TensorElement", "CpMapCandidate", "Verdict", "MEMBER", "NON_MEMBER", "UNDECIDED", "cp_check",
           "min_member", "max_member", "ucp_extension_exists", "positive_lift_exists",
           "sample_max_generators", "sample_positive", "functional_value"]


def _is_quotient(s):
    return isinstance(s, QuotientSystem)


def _nuclear(s):
    return isinstance(s, MatrixSystem) and s.is_full


@dataclass
class TensorElement:
    """Element ``sum_{p,q} coeffs[p, q] (x) A_p (x) B_q`` of ``M_m(S (x) T)``.

    ``coeffs`` has shape ``(dim S, dim T, m, m)`` with Hermitian ``m x m``
    blocks; the concrete representative lives in ``M_m (x) M_k (x) M_l``.
    """

    left: object
    right: object
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == 2:
            c = c[:, :, None, None]
        if c.shape[:2] != (self.left.dim, self.right.dim) or c.ndim != 4 or c.shape[2] != c.shape[3]:
            raise ValueError(f"coefficients of shape {c.shape} do not match the tensorands")
        self.coeffs = 0.5 * (c + np.conj(np.swapaxes(c, 2, 3)))

    @property
    def level(self):
        return self.coeffs.shape[2]

    @classmethod
    def unit(cls, left, right, m=1):
        ul = np.asarray(left.unit_coords(), float)
        ur = np.asarray(right.unit_coords(), float)
        c = np.einsum("p,q,ij->pqij", ul, ur, np.eye(m)).astype(complex)
        return cls(left, right, c)

    @classmethod
    def simple(cls, left, right, s, t):
        """``s (x) t`` for level-``m`` ``s`` (shape ``(dim S, m, m)``) and level-1 ``t``."""
        s = np.asarray(s, dtype=complex)
        if s.ndim == 1:
            s = s[:, None, None]
        return cls(left, right, np.einsum("pij,q->pqij", s, np.asarray(t, dtype=complex)))

    def rep(self):
        a, b = self.left.basis, self.right.basis
        m, k, n = self.level, a.shape[1], b.shape[1]
        out = np.einsum("pqij,pab,qcd->iacjbd", self.coeffs, a, b)
        return out.reshape(m * k * n, m * k * n)

    def flip(self):
        return TensorElement(self.right, self.left, np.swapaxes(self.coeffs, 0, 1))

    def __add__(self, other):
        return TensorElement(self.left, self.right, self.coeffs + other.coeffs)

    def scaled(self, s):
        return TensorElement(self.left, self.right, s * self.coeffs)

    def shifted(self, t):
        """``x + t * unit``."""
        return self + TensorElement.unit(self.left, self.right, self.level).scaled(t)


@dataclass
class CpMapCandidate:
    """Linear map given by target coordinates of the images of the source basis.

    ``images[p]`` holds the target coordinates of ``phi(basis[p])``; for a
    Hermitian-preserving map these are real.
    """

    source: object
    target: object
    images: np.ndarray

    def __post_init__(self):
        im = np.asarray(self.images)
        if np.iscomplexobj(im):
            if np.max(np.abs(im.imag), initial=0.0) > 1e-9:
                raise ValueError("images must be real coordinates (Hermitian-preserving map)")
            im = im.real
        self.images = im.astype(float).reshape(self.source.dim, self.target.dim)

    def image_matrices(self):
        return np.tensordot(self.images, self.target.basis, axes=1)

    def apply(self, coeffs):
        """Apply the map entrywise to a level-``m`` coefficient stack."""
        return np.tensordot(self.images.T, np.asarray(coeffs), axes=([1], [0]))

    @classmethod
    def from_matrices(cls, source, target, mats):
        return cls(source, target, np.real(target.coords(np.asarray(mats, dtype=complex))))


# -- complete positivity ------------------------------------------------------

def cp_check(phi: CpMapCandidate, tol=DEFAULT_TOL, route="auto", cap=3, samples=20, seed=0,
             cfg=sdp.SolverConfig()) -> Verdict:
    """Decide complete positivity of ``phi``.

    Routes: ``"choi"`` (matrix-system target; Choi matrix of an extension to
    the source's parent algebra), ``"abelian"`` (abelian target; positivity
    of each coordinate functional, by LP when the source is abelian too),
    ``"quotient"`` (quotient target; exact through the Choi element when the
    source is a full algebra, otherwise lift-or-refute with UNDECIDED).
    Margins are normalized so that ``A -> tr(A)/n * 1`` scores 1.
    """
    src, tgt = phi.source, phi.target
    if not isinstance(src, MatrixSystem):
        raise TypeError("cp_check expects a matrix-system source")
    if route == "auto":
        if _is_quotient(tgt):
            route = "quotient"
        elif isinstance(tgt, MatrixSystem) and tgt.abelian:
            route = "abelian"
        else:
            route = "choi"
    if route == "choi":
        m0, dirs = choi_lmi(src, phi.image_matrices())
        res = sdp.sup_lambda_min(m0, dirs, cfg) if len(dirs) else _exact_margin(m0)
        return verdict_from_bounds(res, tol, "choi", scale=src.n)
    if route == "abelian":
        return _cp_abelian(phi, tol, cfg)
    if route == "quotient":
        return _cp_quotient(phi, tol, cap, samples, seed, cfg)
    raise ValueError(f"unknown route {route!r}")


def _positive_functional_margin(src, f, cfg):
    """``sup{t : f - t*tr/n is positive on src}`` with certificates."""
    if src.abelian:
        from scipy.optimize import linprog
        # f(B_p) = sum_j rho_j (B_p)_jj + t tr(B_p)/n with rho >= 0; maximize t
        diag = np.real(np.diagonal(src.basis, axis1=1, axis2=2))
        tr = diag.sum(axis=1) / src.n
        a_eq = np.hstack([diag, tr[:, None]])
        res = linprog(np.concatenate([np.zeros(src.n), [-1.0]]), A_eq=a_eq, b_eq=f,
                      bounds=[(0, None)] * src.n + [(None, None)], method="highs")
        if res.status != 0:
            return None
        return float(res.x[-1]), res.x[:-1]
    m0, dirs = choi_lmi(src, f[:, None, None])
    res = sdp.sup_lambda_min(m0, dirs, cfg) if len(dirs) else _exact_margin(m0)
    return res.lower * src.n, res


def _cp_abelian(phi, tol, cfg):
    src, tgt = phi.source, phi.target
    mats = phi.image_matrices()
    vals = np.real(np.diagonal(mats, axis1=1, axis2=2))
    worst, certs = np.inf, []
    for i in range(tgt.n):
        out = _positive_functional_margin(src, vals[:, i], cfg)
        if out is None:
            return Verdict(UNDECIDED, False, route="abelian")
        worst = min(worst, out[0])
        certs.append(out[0])
    status = MEMBER if worst >= -tol else NON_MEMBER
    return Verdict(status, True, worst, worst, "abelian-lp" if src.abelian else "abelian",
                   {"coordinate_margins": certs})


def _choi_coeffs(phi):
    """Level-``k`` coefficient stack of the Choi element ``[phi(e_ab)]`` for a full source."""
    src = phi.source
    k = src.n
    units = np.zeros((k, k, k, k), dtype=complex)
    for a in range(k):
        for b in range(k):
            units[a, b, a, b] = 1.0
    alpha = src.coords(units)  # (k, k, d) complex coefficients of e_ab
    c = np.einsum("abp,pq->qab", alpha, phi.images)
    return c


def _cp_quotient(phi, tol, cap, samples, seed, cfg):
    src, tgt = phi.source, phi.target
    if src.is_full and not src.abelian:
        v = tgt.level_positive(_choi_coeffs(phi), tol, cfg)
        return Verdict(v.status, v.status != UNDECIDED, v.lower, v.upper, "quotient-choi", v.certificate)
    if src.is_full and src.abelian:
        # positive maps out of l_k are completely positive
        worst, cert = np.inf, {}
        for i in range(src.n):
            e = np.zeros((src.n, src.n), dtype=complex)
            e[i, i] = 1.0
            c = np.real(src.coords(e)) @ phi.images
            v = tgt.level_positive(c, tol, cfg)
            if v.status != MEMBER:
                return Verdict(v.status, v.status != UNDECIDED, v.lower, v.upper, "quotient-abelian",
                               {"index": i, **v.certificate})
            worst = min(worst, v.lower)
        return Verdict(MEMBER, True, worst, np.nan, "quotient-abelian", cert)
    # general source: a completely positive lift proves complete positivity
    lift = _cp_lift(phi, cfg)
    if lift.lower >= -tol or lift.status == "UNBOUNDED":
        return Verdict(MEMBER, True, lift.lower, lift.upper, "quotient-lift", {"coeffs": lift.y})
    rng = np.random.default_rng(seed)
    for s in range(samples):
        r = int(rng.integers(1, cap + 1))
        x = sample_positive(src, rng, r, cfg=cfg)
        v = tgt.level_positive(phi.apply(x), tol, cfg)
        if v.status == NON_MEMBER:
            return Verdict(NON_MEMBER, True, v.lower, v.upper, "quotient-witness",
                           {"input": x, **v.certificate})
    return Verdict(UNDECIDED, False, lift.lower, np.nan, "quotient-truncated",
                   {"levels": cap, "samples": samples})


def _cp_lift(phi, cfg):
    src, tgt = phi.source, phi.target
    if tgt.parent == "diag":
        # keep the lifted images inside l_n
        m0, dirs = choi_lmi_diag_target(src, phi.image_matrices())
    else:
        m0, dirs = choi_lmi(src, phi.image_matrices())
    sb = np.swapaxes(src.basis, 1, 2)
    extra = np.einsum("pab,lij->plaibj", sb, tgt.null.basis).reshape(-1, m0.shape[0], m0.shape[0])
    alld = np.concatenate([dirs, extra]) if len(extra) else dirs
    res = sdp.sup_lambda_min(m0, alld, cfg) if len(alld) else _exact_margin(m0)
    return sdp.LmiResult(res.status, res.value * src.n, res.y, res.density, res.upper * src.n,
                         res.lower * src.n)


def choi_lmi_diag_target(src, images):
    """Like :func:`choi_lmi` with the free images restricted to diagonal matrices."""
    nt = images.shape[1]
    m0, _ = choi_lmi(src, images)
    comp = _complement_in(src.basis, src.n, src.parent)
    diag = np.zeros((nt, nt, nt), dtype=complex)
    diag[np.arange(nt), np.arange(nt), np.arange(nt)] = 1.0
    if len(comp) == 0:
        return m0, np.zeros((0,) + m0.shape, dtype=complex)
    dirs = np.einsum("lba,tij->ltaibj", comp, diag).reshape(len(comp) * nt, src.n * nt, src.n * nt)
    return m0, dirs


# -- sampling -----------------------------------------------------------------

def sample_positive(system, rng, m=1, spread=0.1, cfg=sdp.SolverConfig()):
    """Random element of ``M_m(system)^+`` at unit-normalized margin ``U(0, spread)``."""
    c = system.random_element(rng, m)
    res = system.margin(c, cfg)
    t = res.lower if np.isfinite(res.lower) else 0.0
    u = np.asarray(system.unit_coords(), dtype=float)
    return c + (float(rng.uniform(0.0, spread)) - t) * u[:, None, None] * np.eye(m)[None]


def sample_max_generators(left, right, count, seed=0, cap=2, level=1, cfg=sdp.SolverConfig()):
    """Compressions ``X (P (x) Q) X*`` of random positives ``P``, ``Q`` with sizes up to ``cap``."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        p = int(rng.integers(1, cap + 1))
        q = int(rng.integers(1, cap + 1))
        pm = sample_positive(left, rng, p, cfg=cfg)
        qm = sample_positive(right, rng, q, cfg=cfg)
        x = rng.standard_normal((level, p * q)) + 1j * rng.standard_normal((level, p * q))
        kron = np.einsum("pab,qcd->pqacbd", pm, qm).reshape(left.dim, right.dim, p * q, p * q)
        c = np.einsum("ia,pqab,jb->pqij", x, kron, np.conj(x))
        out.append(TensorElement(left, right, c))
    return out


# -- min / max membership ------------------------------------------------------

def _fold_directions(m, left, extra):
    """``Herm(M_m) (x) left-basis (x) extra`` stacked as concrete matrices."""
    e = linalg.herm_basis(m)
    a = left.basis
    out = np.einsum("tij,pab,lcd->tpliacjbd", e, a, extra)
    size = m * a.shape[1] * extra.shape[1]
    return out.reshape(-1, size, size)


def _full_left_directions(m, left, extra, abelian):
    """``Herm(M_K) (x) extra`` for ``K = m * k`` (or its diagonal part when abelian)."""
    k = m * left.basis.shape[1]
    if abelian:
        e = np.zeros((k, k, k), dtype=complex)
        e[np.arange(k), np.arange(k), np.arange(k)] = 1.0
    else:
        e = linalg.herm_basis(k)
    out = np.einsum("tij,lab->tliajb", e, extra)
    return out.reshape(-1, k * extra.shape[1], k * extra.shape[1])


def min_member(x: TensorElement, tol=DEFAULT_TOL, route="auto", samples=20, cap=2, seed=0,
               cfg=sdp.SolverConfig()) -> Verdict:
    """Membership in the minimal tensor cone at the element's level."""
    lq, rq = _is_quotient(x.left), _is_quotient(x.right)
    if not lq and not rq:
        return verdict_from_bounds(_exact_margin(x.rep()), tol, "spatial")
    if lq and not rq:
        v = min_member(x.flip(), tol, route, samples, cap, seed, cfg)
        return Verdict(v.status, v.grounded, v.lower, v.upper, v.route + "+flip", v.certificate)
    if not lq and rq:
        if route in ("auto", "quotient"):
            abelian = x.left.abelian and x.level == 1
            dirs = _full_left_directions(x.level, x.left, x.right.null.basis, abelian)
            res = sdp.sup_lambda_min(x.rep(), dirs, cfg) if len(dirs) else _exact_margin(x.rep())
            return verdict_from_bounds(res, tol, "quotient")
        if route == "cp":
            return _min_via_cp(x, tol, cfg)
        raise ValueError(f"unknown route {route!r}")
    return _min_two_quotients(x, tol, samples, cap, seed, cfg)


def _min_via_cp(x, tol, cfg):
    """Route through the dual: ``x`` is min-positive iff ``R -> M_K``,
    ``A -> sum_q c_q tr(A^T b_q)/n``, is completely positive, where ``R`` is
    the annihilator of ``J`` (the raw dual of the quotient)."""
    q = x.right
    n = q.n
    k = x.left.n
    m = x.level
    # the raw annihilator need not contain I, but it contains a positive
    # definite element, which is all the Choi extension needs
    r_basis = np.conj(q.basis)
    # value of the map on each raw element: sum_q c_q tr(raw_r^T b_q)/n
    pair = linalg.inner(q.basis[:, None], q.basis[None]) / n
    cfold = np.einsum("pqij,pab->qiajb", x.coeffs, x.left.basis).reshape(q.dim, m * k, m * k)
    images = np.tensordot(pair, cfold, axes=1)
    fake = _RawSpan(n, r_basis, q.parent)
    m0, dirs = choi_lmi(fake, images)
    res = sdp.sup_lambda_min(m0, dirs, cfg) if len(dirs) else _exact_margin(m0)
    return verdict_from_bounds(res, tol, "cp", scale=n)


class _RawSpan:
    """Minimal stand-in for a matrix system whose span may miss the identity."""

    def __init__(self, n, basis, parent):
        self.n = n
        self.basis = np.asarray(basis)
        self.parent = parent
        self.dim = len(self.basis)


def _min_two_quotients(x, tol, samples, cap, seed, cfg):
    # a lift through the (nuclear) parents certifies max- and hence min-positivity
    lift = _max_two_quotients(x, tol, cfg)
    if lift.status == MEMBER:
        return Verdict(MEMBER, True, lift.lower, np.nan, "sandwich-lift", lift.certificate)
    # otherwise look for a ucp map psi on the right with (id (x) psi)(x) not positive
    rng = np.random.default_rng(seed)
    left = x.left
    best = lift.upper
    for s in range(samples):
        r = int(rng.integers(1, cap + 1))
        psi = sample_ucp_from_quotient(x.right, r, rng, cfg)
        if psi is None:
            continue
        # (id (x) psi)(x) lives in M_{m r}(left)
        c = np.einsum("pqij,qab->piajb", x.coeffs, psi).reshape(left.dim, x.level * r, x.level * r)
        v = left.level_positive(c, tol, cfg)
        if v.status == NON_MEMBER:
            return Verdict(NON_MEMBER, True, v.lower, v.upper, "sandwich-ucp",
                           {"psi": psi, **v.certificate})
    return Verdict(UNDECIDED, False, lift.lower, best, "sandwich", {"samples": samples, "cap": cap})


def sample_ucp_from_quotient(q: QuotientSystem, r, rng, cfg=sdp.SolverConfig()):
    """Random ucp map ``P/J -> M_r`` as the images of the coset basis, shape ``(d, r, r)``.

    Extreme-ish points: maximize a random linear objective over Choi
    matrices ``C`` on ``P (x) M_r`` with ``C >= 0``, unit ``I -> I_r`` and ``J -> 0``.
    """
    n = q.n
    size = n * r
    # Choi C = sum_ab e_ab (x) Phi(e_ab); Phi(A) = tr_1[(A^T (x) I) C]
    hb = linalg.herm_basis(r)
    cons, rhs = [], []
    for e in hb:
        cons.append(np.kron(np.eye(n), e))
        rhs.append(np.real(np.trace(e)))
    for j in q.null.basis:
        for e in hb:
            cons.append(np.kron(j.T, e))
            rhs.append(0.0)
    # for l_n this is a ucp map on M_n vanishing on J; restricting to the
    # diagonal gives the ucp map on l_n
    obj = linalg.random_hermitian(rng, size)
    p = sdp.SdpProblem(blocks=[(size, sdp.PSD)], objective=[obj], constraints=[np.array(cons)],
                       rhs=np.array(rhs))
    sol = sdp.solve(p, cfg)
    if sol.status != sdp.OPTIMAL:
        return None
    choi = sol.primal[0]
    c4 = choi.reshape(n, r, n, r)
    # Phi(B) = sum_ab B_ab C[a, :, b, :]
    return np.einsum("pab,aibj->pij", q.basis, c4)


def max_member(x: TensorElement, tol=DEFAULT_TOL, cap=2, samples=4, seed=0,
               cfg=sdp.SolverConfig()) -> Verdict:
    """Membership in the maximal tensor cone at the element's level."""
    lq, rq = _is_quotient(x.left), _is_quotient(x.right)
    if lq and rq:
        return _max_two_quotients(x, tol, cfg)
    if lq:
        v = max_member(x.flip(), tol, cap, samples, seed, cfg)
        return Verdict(v.status, v.grounded, v.lower, v.upper, v.route + "+flip", v.certificate)
    if rq:
        dirs = _fold_directions(x.level, x.left, x.right.null.basis)
        res = sdp.sup_lambda_min(x.rep(), dirs, cfg) if len(dirs) else _exact_margin(x.rep())
        return verdict_from_bounds(res, tol, "projective")
    # both matrix systems
    if _nuclear(x.left) or _nuclear(x.right):
        v = min_member(x, tol)
        return Verdict(v.status, v.grounded, v.lower, v.upper, "nuclear", v.certificate)
    return _max_sandwich(x, tol, cap, samples, seed, cfg)


def _max_two_quotients(x, tol, cfg):
    a, b = x.left, x.right
    m = x.level
    pa = _parent_basis_of(a)
    pb = _parent_basis_of(b)
    e = linalg.herm_basis(m)
    parts = []
    if a.null.dim:
        parts.append(np.einsum("tij,pab,lcd->tpliacjbd", e, a.null.basis, pb))
    if b.null.dim:
        parts.append(np.einsum("tij,pab,lcd->tpliacjbd", e, pa, b.null.basis))
    size = m * a.n * b.n
    rep = x.rep()
    if not parts:
        return verdict_from_bounds(_exact_margin(rep), tol, "projective-lift")
    dirs = np.concatenate([p.reshape(-1, size, size) for p in parts])
    res = sdp.sup_lambda_min(rep, dirs, cfg)
    return verdict_from_bounds(res, tol, "projective-lift")


def _parent_basis_of(q):
    from .opsys import _parent_basis
    return _parent_basis(q.n, q.parent)


# -- sandwich for two matrix systems --------------------------------------------

def _folded_basis(system, m):
    """Basis ``E_t (x) A_p`` of ``M_m(system)`` with the unit first, plus the
    coordinate transform from ``(p, m, m)`` coefficient stacks."""
    e = linalg.herm_basis(m)
    basis = np.einsum("tij,pab->tpiajb", e, system.basis).reshape(len(e) * system.dim, m * system.n,
                                                                  m * system.n)
    return basis, e


def _family_generators(system, rng, cap, samples, cfg):
    """Positive generators of ``M_q(system)`` used in inner decompositions.

    Always includes the unit; full algebras contribute the canonical
    ``sum e_ab (x) e_ab``, abelian systems their extreme rays, and
    everything gets sampled boundary positives with ``q <= cap``.
    """
    gens = [np.asarray(system.unit_coords(), float)[:, None, None].astype(complex)]
    if isinstance(system, MatrixSystem) and system.is_full and not system.abelian:
        k = system.n
        units = np.zeros((k, k, k, k), dtype=complex)
        for a in range(k):
            for b in range(k):
                units[a, b, a, b] = 1.0
        gens.append(np.moveaxis(system.coords(units), -1, 0))
    if isinstance(system, MatrixSystem) and system.abelian:
        from .polyhedral import extreme_rays
        try:
            for r in extreme_rays(system):
                c = np.real(system.coords(np.diag(np.asarray(r, dtype=float)).astype(complex)))
                gens.append(c[:, None, None].astype(complex))
        except Exception:
            pass
    for _ in range(samples):
        q = int(rng.integers(1, cap + 1))
        gens.append(sample_positive(system, rng, q, spread=0.0, cfg=cfg))
    return gens


def _max_sandwich(x, tol, cap, samples, seed, cfg):
    outer = min_member(x, tol)
    if outer.status == NON_MEMBER:
        return Verdict(NON_MEMBER, True, outer.lower, outer.upper, "sandwich-min", outer.certificate)
    rng = np.random.default_rng(seed)
    m = x.level
    # fold the level into the left tensorand
    e = linalg.herm_basis(m)
    xc = np.real(np.einsum("tij,pqij->tpq", np.conj(e), x.coeffs)).reshape(len(e) * x.left.dim, x.right.dim)
    fold_left = _FoldedSystem(x.left, m)
    lgens = _family_generators(fold_left, rng, cap, samples, cfg)
    rgens = _family_generators(x.right, rng, cap, samples, cfg)
    res = _decompose(xc, fold_left, x.right, lgens, rgens, cfg)
    if res is not None and res[0] >= -tol:
        return Verdict(MEMBER, True, res[0], outer.lower, "sandwich-decomposition",
                       {"slack": res[0], "families": len(lgens) + len(rgens)})
    lower = res[0] if res is not None else -np.inf
    return Verdict(UNDECIDED, False, lower, outer.lower, "sandwich",
                   {"cap": cap, "samples": samples, "inner": lower, "outer": outer.lower})


class _FoldedSystem(MatrixSystem):
    """``M_m(S)`` as a matrix system in ``M_{m n}`` with basis ``E_t (x) A_p``."""

    def __init__(self, system, m):
        self.inner_system = system
        self.m = m
        basis, e = _folded_basis(system, m)
        self.n = m * system.n
        self.basis = basis
        self.name = f"M{m}({system.name})"
        self.abelian = system.abelian and m == 1
        self._unit = np.einsum("t,p->tp", np.real(np.trace(e, axis1=1, axis2=2)),
                               system.unit_coords()).ravel()
        self._full = system.is_full and not system.abelian

    @property
    def is_full(self):
        return self._full or (self.m == 1 and self.inner_system.is_full)

    def unit_coords(self):
        return self._unit

    def margin(self, coeffs, cfg=None):
        return _exact_margin(kron_sum(np.asarray(coeffs), self.basis))

    def coords(self, h):
        return linalg.coords(h, self.basis)

    def random_element(self, rng, m=1):
        c = rng.standard_normal((self.dim, m, m)) + 1j * rng.standard_normal((self.dim, m, m))
        return 0.5 * (c + np.conj(np.swapaxes(c, 1, 2)))


def _decompose(xc, left, right, lgens, rgens, cfg):
    """Maximize ``s`` with ``x - s*unit = sum_Q Z_Q . Q + sum_P P . Y_P``.

    ``Z_Q`` ranges over ``M_q(left)^+`` for fixed right generators ``Q`` and
    ``Y_P`` over ``M_p(right)^+`` for fixed left generators ``P``. Returns
    ``(s, blocks)`` or ``None`` when the engine fails.
    """
    dl, dr = xc.shape
    lb = left.basis
    rb = right.basis
    cols = []  # per variable: (block index, block matrix, contribution vector)
    blocks = []

    def add_family(gen, fixed_is_right):
        q = gen.shape[1]
        hb = linalg.herm_basis(q)
        vb = lb if fixed_is_right else rb
        bi = len(blocks)
        blocks.append(q * vb.shape[1])
        for t, f in enumerate(hb):
            # contribution coefficient for free index p and fixed-side index s: tr(F_t^T gen_s)
            w = np.real(np.einsum("ab,sab->s", f, gen))
            for p in range(len(vb)):
                contrib = np.zeros((dl, dr))
                if fixed_is_right:
                    contrib[p, :] = w
                else:
                    contrib[:, p] = w
                cols.append((bi, np.kron(f, vb[p]), contrib.ravel()))

    for g in rgens:
        add_family(np.asarray(g), True)
    for g in lgens:
        add_family(np.asarray(g), False)
    nv = len(cols) + 1
    unit = np.outer(left.unit_coords(), right.unit_coords()).ravel()
    # LMI form: y = (variables, s); each PSD block is sum_i y_i M_i >= 0 (C = 0, A_i = -M_i)
    objective, constraints, kinds = [], [], []
    for bi, size in enumerate(blocks):
        a = np.zeros((nv, size, size), dtype=complex)
        for i, (b, mat, _) in enumerate(cols):
            if b == bi:
                a[i] = -mat
        objective.append(np.zeros((size, size)))
        constraints.append(a)
        kinds.append((size, sdp.PSD))
    free = np.zeros((nv, dl * dr))
    for i, (_, _, contrib) in enumerate(cols):
        free[i] = contrib
    free[-1] = unit
    objective.append(xc.ravel())
    constraints.append(free)
    kinds.append((dl * dr, sdp.FREE))
    rhs = np.zeros(nv)
    rhs[-1] = 1.0
    p = sdp.SdpProblem(blocks=kinds, objective=objective, constraints=constraints, rhs=rhs, sense="MIN")
    sol = sdp.solve(p, cfg)
    if sol.status != sdp.OPTIMAL:
        return None
    y = sol.dual
    # re-check the decomposition independently of the engine
    mats = []
    for bi, size in enumerate(blocks):
        z = -np.tensordot(y, constraints[bi], axes=1)
        if linalg.lambda_min(z) < -1e-8:
            return None
        mats.append(z)
    recon = free.T @ y
    if np.max(np.abs(recon - xc.ravel()), initial=0.0) > 1e-7 * (1.0 + np.max(np.abs(xc))):
        return None
    return float(y[-1]), mats


# -- extensions and lifts -------------------------------------------------------

def ucp_extension_exists(s1: MatrixSystem, s2: MatrixSystem, phi: CpMapCandidate, tol=DEFAULT_TOL,
                         cfg=sdp.SolverConfig()) -> Verdict:
    """Does the ucp map ``phi: S1 -> R`` extend to a ucp map ``S2 -> R``?

    Solved as a Choi LMI on ``M_k (x) M_N``: the map is fixed on ``S1``, takes
    values in ``R`` on ``S2 (-) S1`` and is free on the rest of the parent.
    MEMBER attaches the extension; NON_MEMBER attaches a density ``X``
    orthogonal to all free directions with ``<M0, X> < 0``, which is a
    positive functional on ``S1 (x) R*`` (the one defined by ``phi``) that
    admits no positive extension to ``S2 (x) R*``.
    """
    r = phi.target
    if phi.source is not s1 and phi.source.dim != s1.dim:
        raise ValueError("phi must be defined on S1")
    k = s1.n
    if s2.n != k:
        raise ValueError("S1 and S2 must share the ambient algebra")
    if not all(s2.contains(b) for b in s1.basis):
        raise ValueError("S1 is not contained in S2")
    nt = r.n
    m0, _ = choi_lmi(s1, phi.image_matrices())
    # orthonormal basis of S2 minus S1
    q1 = linalg.orthonormalize(s1.basis)
    o2 = linalg.orthonormalize(list(q1) + list(s2.basis))[len(q1):]
    o3 = s2.complement()
    hb = linalg.herm_basis(nt)
    parts = []
    if len(o2):
        parts.append(np.einsum("lba,sij->lsaibj", o2, r.basis).reshape(-1, k * nt, k * nt))
    if len(o3):
        parts.append(np.einsum("lba,tij->ltaibj", o3, hb).reshape(-1, k * nt, k * nt))
    dirs = np.concatenate(parts) if parts else np.zeros((0, k * nt, k * nt), dtype=complex)
    res = sdp.sup_lambda_min(m0, dirs, cfg) if len(dirs) else _exact_margin(m0)
    v = verdict_from_bounds(res, tol, "extension", scale=k)
    if v.status == MEMBER:
        y = np.asarray(res.y)[: len(o2) * r.dim].reshape(len(o2), r.dim) if len(o2) else np.zeros((0, r.dim))
        # extension on the S2 basis: phi on the S1 part plus the fitted values on O2
        p1 = np.real(s1.coords(s2.basis))  # coordinates of the S1-projection (orthogonal)
        proj = np.tensordot(p1, s1.basis, axes=1)
        resid = s2.basis - proj
        c2 = linalg.inner(o2[None], resid[:, None]) if len(o2) else np.zeros((s2.dim, 0))
        images = p1 @ phi.images + c2 @ y
        ext = CpMapCandidate(s2, r, images)
        return Verdict(MEMBER, True, v.lower, v.upper, "extension", {"extension": ext, "lambda_min": v.lower})
    if v.status == NON_MEMBER:
        cert = dict(v.certificate)
        cert["f_phi"] = phi.images.copy()
        return Verdict(NON_MEMBER, True, v.lower, v.upper, "extension", cert)
    return v


def positive_lift_exists(x: TensorElement, eps=1e-6, tol=DEFAULT_TOL, cfg=sdp.SolverConfig()) -> Verdict:
    """Is ``x + eps*unit`` the image of a positive element of ``S (x) P``?

    ``x`` lives in ``S (x) (P/J)`` with ``S`` a matrix system. MEMBER carries
    the lift ``U`` itself.
    """
    if not (isinstance(x.left, MatrixSystem) and _is_quotient(x.right)):
        raise TypeError("positive_lift_exists expects (matrix system) (x) (quotient)")
    y = x.shifted(eps)
    dirs = _fold_directions(y.level, y.left, y.right.null.basis)
    rep = y.rep()
    res = sdp.sup_lambda_min(rep, dirs, cfg) if len(dirs) else _exact_margin(rep)
    v = verdict_from_bounds(res, tol, "lift")
    if v.status == MEMBER:
        shift = np.tensordot(res.y, dirs, axes=1) if len(dirs) else 0
        lift = rep + shift
        if res.status == "UNBOUNDED":
            # y is a recession direction: push along it until the lift is PSD
            t = 1.0
            while linalg.lambda_min(lift) < 0 and t < 1e12:
                t *= 10.0
                lift = rep + t * shift
        return Verdict(MEMBER, True, v.lower, v.upper, "lift",
                       {"lift": lift, "lambda_min": linalg.lambda_min(lift)})
    return v


def functional_value(density, x: TensorElement):
    """``<X, rep(x)>`` for a separating density of matching size."""
    return float(linalg.inner(density, x.rep()))
