"""Small dense semidefinite programs with primal and dual certificates.

Problems are stated in primal standard form::

    minimize    sum_b <C_b, X_b>
    subject to  sum_b <A_ib, X_b> = b_i      (i = 1..m)
                X_b PSD (Hermitian) for PSD blocks, X_b a free real vector otherwise

whose dual is the linear matrix inequality ``max b.y  s.t.  C_b - sum_i y_i A_ib``
PSD (PSD blocks) and ``= 0`` (FREE blocks). Complex blocks are realified
before solving and mapped back by averaging the two real copies.

The numerical engine is CVXOPT's cone solver (primal-dual interior point with
Nesterov-Todd scaling and infeasibility certificates), run on linearly
independent constraints after a small presolve. Everything the
oracles rely on is re-checked by :func:`verify_certificate` with plain
eigenvalue tests.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import cvxopt
import cvxopt.solvers
import numpy as np
import scipy.linalg

from . import linalg

PSD = "PSD"
FREE = "FREE"

OPTIMAL = "OPTIMAL"
PRIMAL_INFEASIBLE = "PRIMAL_INFEASIBLE"
DUAL_INFEASIBLE = "DUAL_INFEASIBLE"
STALLED = "STALLED"

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200


@dataclass(frozen=True)
class SolverConfig:
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    seed: int = 0  # the engine is deterministic; kept for the config contract


@dataclass
class SdpProblem:
    """Block SDP in primal standard form.

    ``objective[b]`` is a Hermitian ``d x d`` array for PSD blocks and a real
    length-``d`` vector for FREE blocks. ``constraints[b]`` stacks the
    per-constraint coefficients of block ``b`` with shape ``(m, d, d)`` or
    ``(m, d)``. ``sense`` is ``"MIN"`` or ``"MAX"``.
    """

    blocks: list
    objective: list
    constraints: list
    rhs: np.ndarray
    sense: str = "MIN"

    def __post_init__(self):
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        m = len(self.rhs)
        if not np.all(np.isfinite(self.rhs)):
            raise ValueError("constraint right-hand sides must be finite")
        if self.sense not in ("MIN", "MAX"):
            raise ValueError(f"bad sense {self.sense!r}")
        objs, cons = [], []
        for (dim, kind), c, a in zip(self.blocks, self.objective, self.constraints):
            if kind == PSD:
                c = np.asarray(c, dtype=complex).reshape(dim, dim)
                a = np.asarray(a, dtype=complex).reshape(m, dim, dim)
                c = 0.5 * (c + c.conj().T)
                a = 0.5 * (a + np.conj(np.swapaxes(a, 1, 2)))
            elif kind == FREE:
                c = np.asarray(c, dtype=float).reshape(dim)
                a = np.asarray(a, dtype=float).reshape(m, dim)
            else:
                raise ValueError(f"bad block kind {kind!r}")
            objs.append(c)
            cons.append(a)
        self.blocks = [(int(d), k) for d, k in self.blocks]
        self.objective = objs
        self.constraints = cons

    @property
    def n_constraints(self):
        return len(self.rhs)

    def constraint_matrices(self, i):
        """Per-block coefficients of constraint ``i`` (the list-of-pairs view)."""
        return [a[i] for a in self.constraints], float(self.rhs[i])


@dataclass
class SdpSolution:
    status: str
    primal: list = field(default_factory=list)
    dual: np.ndarray = None
    primal_objective: float = float("nan")
    dual_objective: float = float("nan")
    gap: float = float("nan")
    iterations: int = 0
    # PRIMAL_INFEASIBLE: y with sum y_i A_i <= 0 (PSD blocks), = 0 (FREE), b.y = 1
    farkas: np.ndarray = None
    # DUAL_INFEASIBLE: primal ray X with <A_i, X> = 0 and objective < 0
    ray: list = None
    engine_status: str = ""


def _sign(p):
    return 1.0 if p.sense == "MIN" else -1.0


def _is_real(arrs):
    return all(np.max(np.abs(np.imag(a)), initial=0.0) == 0.0 for a in arrs)


def _block_forms(p):
    """Per PSD block: (real?, real dim, real objective, real constraint stack)."""
    forms = []
    for (d, kind), c, a in zip(p.blocks, p.objective, p.constraints):
        if kind == FREE:
            forms.append(None)
            continue
        if _is_real([c, a]):
            forms.append((True, d, c.real, a.real))
        else:
            rc = linalg.realify(c) / 2.0
            ra = np.stack([linalg.realify(x) / 2.0 for x in a]) if len(a) else np.zeros((0, 2 * d, 2 * d))
            forms.append((False, 2 * d, rc, ra))
    return forms


def _from_real(form, y):
    real, d2, _, _ = form
    if real:
        return 0.5 * (y + y.T).astype(complex)
    d = d2 // 2
    re = 0.5 * (y[:d, :d] + y[d:, d:])
    im = 0.5 * (y[d:, :d] - y[:d, d:])
    x = re + 1j * im
    return 0.5 * (x + x.conj().T)


def _constraint_vectors(p):
    """Each constraint as one real vector over all blocks (for rank tests)."""
    parts = []
    for (d, kind), a in zip(p.blocks, p.constraints):
        if kind == PSD:
            parts.append(a.real.reshape(len(a), -1))
            parts.append(a.imag.reshape(len(a), -1))
        else:
            parts.append(a)
    return np.concatenate(parts, axis=1) if parts else np.zeros((p.n_constraints, 0))


def _independent_rows(mat, rank_tol=1e-10):
    """Indices of a maximal independent row subset, chosen greedily in order."""
    if mat.shape[0] == 0:
        return []
    _, r, piv = scipy.linalg.qr(mat.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        return []
    rank = int(np.sum(diag > rank_tol * diag[0]))
    return sorted(piv[:rank].tolist())


def _solve_options(cfg):
    t = max(min(cfg.tol * 1e-1, 1e-9), 1e-12)
    return {"show_progress": False, "maxiters": int(cfg.max_iter), "abstol": t, "reltol": t, "feastol": t,
            "refinement": 2}


def solve(p: SdpProblem, cfg: SolverConfig = SolverConfig()) -> SdpSolution:
    """Solve ``p``; deterministic for a fixed problem and config."""
    m = p.n_constraints
    if not p.blocks:
        return _trivial(p)
    if m == 0:
        return _no_constraints(p, _block_forms(p))
    # the engine needs linearly independent constraints; dependent ones are
    # either redundant or expose infeasibility directly
    vecs = _constraint_vectors(p)
    keep = _independent_rows(vecs)
    if len(keep) < m:
        coef, *_ = np.linalg.lstsq(vecs[keep].T, vecs.T, rcond=None)
        resid = p.rhs - coef.T @ p.rhs[keep]
        scale = 1.0 + np.max(np.abs(p.rhs), initial=0.0)
        bad = int(np.argmax(np.abs(resid)))
        if abs(resid[bad]) > 1e-9 * scale:
            y = np.zeros(m)
            y[bad] = 1.0
            y[keep] -= coef[:, bad]
            y /= float(p.rhs @ y)
            return SdpSolution(status=PRIMAL_INFEASIBLE, farkas=y, engine_status="presolve")
        sub = SdpProblem(blocks=p.blocks, objective=p.objective, constraints=[a[keep] for a in p.constraints],
                         rhs=p.rhs[keep], sense=p.sense)
        sol = solve(sub, cfg)
        if sol.dual is not None and len(sol.dual) == len(keep):
            full = np.zeros(m)
            full[keep] = sol.dual
            sol.dual = full
        if sol.farkas is not None:
            full = np.zeros(m)
            full[keep] = sol.farkas
            sol.farkas = full
        return sol
    return _solve_engine(p, cfg)


def _solve_engine(p, cfg):
    sgn = _sign(p)
    m = p.n_constraints
    forms = _block_forms(p)
    gs, hs = [], []
    eq_rows, eq_rhs = [], []
    for (d, kind), c, a in zip(p.blocks, p.objective, p.constraints):
        if kind == FREE:
            eq_rows.append(a.T)
            eq_rhs.append(sgn * c)
    for form in forms:
        if form is None:
            continue
        _, d2, rc, ra = form
        # symmetric data, so column-major and row-major vec agree
        gs.append(cvxopt.matrix(np.ascontiguousarray(ra.reshape(m, -1).T)))
        hs.append(cvxopt.matrix(np.ascontiguousarray(sgn * rc)))
    kwargs = {}
    if eq_rows:
        aeq = np.vstack(eq_rows)
        beq = np.concatenate(eq_rhs)
        rows = _independent_rows(aeq)
        if len(rows) < len(aeq):
            coef, *_ = np.linalg.lstsq(aeq[rows].T, aeq.T, rcond=None)
            resid = beq - coef.T @ beq[rows]
            bad = int(np.argmax(np.abs(resid)))
            if abs(resid[bad]) > 1e-9 * (1.0 + np.max(np.abs(beq), initial=0.0)):
                return _free_ray(p, rows, coef, bad, resid[bad])
            aeq, beq = aeq[rows], beq[rows]
        else:
            rows = list(range(len(aeq)))
        kwargs["A"] = cvxopt.matrix(np.ascontiguousarray(aeq))
        kwargs["b"] = cvxopt.matrix(np.ascontiguousarray(beq))
    else:
        rows = []
    if not gs:
        # only FREE blocks: a plain linear system
        return _solve_linear(p)
    cvec = cvxopt.matrix(np.ascontiguousarray(-p.rhs.astype(float)))
    res = None
    for kkt in ("chol2", "ldl"):
        try:
            res = cvxopt.solvers.sdp(cvec, Gs=gs, hs=hs, kktsolver=kkt, options=_solve_options(cfg), **kwargs)
            break
        except (ArithmeticError, ValueError):
            continue
    if res is None:
        return SdpSolution(status=STALLED, engine_status="kkt failure")
    status = str(res["status"])
    x = np.array(res["x"]).reshape(-1) if res["x"] is not None else None
    zs = [np.array(z) for z in res["zs"]] if res["zs"] is not None else None
    yeq = np.array(res["y"]).reshape(-1) if res["y"] is not None and eq_rows else np.zeros(0)
    sol = SdpSolution(status=STALLED, iterations=int(res["iterations"]), engine_status=status)

    def primal_from(zs, yeq):
        free_all = np.zeros(sum(d for d, k in p.blocks if k == FREE))
        free_all[rows] = yeq
        out, zi, fi = [], iter(zs), 0
        for (d, kind), form in zip(p.blocks, forms):
            if kind == FREE:
                out.append(free_all[fi:fi + d].copy())
                fi += d
            else:
                out.append(_from_real(form, next(zi)))
        return out

    if status in ("optimal", "unknown") and x is not None and zs is not None:
        sol.primal = primal_from(zs, yeq)
        sol.dual = sgn * x
        _fill_objectives_raw(p, sol)
        if status == "optimal" or _optimal_ok(p, sol, 10 * cfg.tol):
            sol.status = OPTIMAL
            return sol
    if status == "dual infeasible" or (status == "unknown" and x is not None):
        # certificate x: sum x_i A_i <= 0, free rows vanish, b.x > 0
        cand = np.array(res["x"]).reshape(-1) if res["x"] is not None else None
        if cand is not None and float(p.rhs @ cand) > 0:
            farkas = cand / float(p.rhs @ cand)
            trial = SdpSolution(status=PRIMAL_INFEASIBLE, farkas=farkas, engine_status=status)
            if status == "dual infeasible" or verify_certificate(p, trial, cfg.tol):
                return trial
    if status == "primal infeasible" or (status == "unknown" and zs is not None):
        if zs is not None:
            ray = primal_from(zs, yeq)
            obj = sgn * _objective(p, ray)
            if obj < 0:
                trial = SdpSolution(status=DUAL_INFEASIBLE, ray=[r / abs(obj) for r in ray], engine_status=status)
                if status == "primal infeasible" or verify_certificate(p, trial, cfg.tol):
                    return trial
    if not sol.primal and zs is not None and x is not None:
        sol.primal = primal_from(zs, yeq)
        sol.dual = sgn * x
        _fill_objectives_raw(p, sol)
    return sol


def _free_ray(p, rows, coef, bad, resid):
    """Inconsistent FREE equations give a primal ray supported on the FREE blocks."""
    nfree = coef.shape[1]
    v = np.zeros(nfree)
    v[bad] = 1.0
    v[rows] -= coef[:, bad]
    # a_free v = 0 and c.v = resid; orient so the objective decreases
    v *= -np.sign(_sign(p) * resid) / abs(resid)
    ray, fi = [], 0
    for d, kind in p.blocks:
        if kind == FREE:
            ray.append(v[fi:fi + d].copy())
            fi += d
        else:
            ray.append(np.zeros((d, d), dtype=complex))
    return SdpSolution(status=DUAL_INFEASIBLE, ray=ray, engine_status="presolve")


def _solve_linear(p):
    """All blocks FREE: the LMI is the linear system sum_i y_i a_i = c."""
    a = np.vstack([a.T for a in p.constraints])
    c = np.concatenate(p.objective)
    y, *_ = np.linalg.lstsq(a, c, rcond=None)
    r = c - a @ y
    if np.max(np.abs(r), initial=0.0) > 1e-9 * (1.0 + np.max(np.abs(c), initial=0.0)):
        ray, fi = [], 0
        obj = _sign(p) * float(c @ r)
        for d, kind in p.blocks:
            ray.append(-r[fi:fi + d] / obj)
            fi += d
        return SdpSolution(status=DUAL_INFEASIBLE, ray=ray, engine_status="linear")
    x, *_ = np.linalg.lstsq(a.T, p.rhs, rcond=None)
    res = p.rhs - a.T @ x
    if np.max(np.abs(res), initial=0.0) > 1e-9 * (1.0 + np.max(np.abs(p.rhs), initial=0.0)):
        return SdpSolution(status=PRIMAL_INFEASIBLE, farkas=res / float(p.rhs @ res), engine_status="linear")
    primal, fi = [], 0
    for d, kind in p.blocks:
        primal.append(x[fi:fi + d].copy())
        fi += d
    sol = SdpSolution(status=OPTIMAL, primal=primal, dual=y, engine_status="linear")
    _fill_objectives_raw(p, sol)
    return sol


def _objective(p, primal):
    total = 0.0
    for (d, kind), c, x in zip(p.blocks, p.objective, primal):
        total += float(np.real(np.sum(np.conj(c) * x))) if kind == PSD else float(c @ x)
    return total


def _dual_slacks(p, y):
    out = []
    for (d, kind), c, a in zip(p.blocks, p.objective, p.constraints):
        s = c - np.tensordot(y, a, axes=1) if len(y) else c.copy()
        out.append(s)
    return out


def _fill_objectives_raw(p, sol):
    y = sol.dual
    sol.primal_objective = _objective(p, sol.primal)
    sol.dual_objective = float(p.rhs @ y)
    sol.gap = abs(sol.primal_objective - sol.dual_objective) / (
        1.0 + abs(sol.primal_objective) + abs(sol.dual_objective))


def _trivial(p):
    return SdpSolution(status=OPTIMAL, primal=[np.zeros((d, d), complex) if k == PSD else np.zeros(d)
                                               for d, k in p.blocks],
                       dual=np.zeros(0), primal_objective=0.0, dual_objective=0.0, gap=0.0)


def _no_constraints(p, forms):
    """No equality constraints: X = 0 is optimal iff every PSD objective is PSD and FREE ones vanish."""
    sgn = _sign(p)
    ok = True
    for (d, kind), c in zip(p.blocks, p.objective):
        c = sgn * c
        if kind == PSD:
            ok &= linalg.lambda_min(c) >= -DEFAULT_TOL
        else:
            ok &= np.max(np.abs(c), initial=0.0) <= DEFAULT_TOL
    if ok:
        return _trivial(p)
    ray = []
    for (d, kind), c in zip(p.blocks, p.objective):
        c = sgn * c
        if kind == PSD:
            w, u = np.linalg.eigh(c)
            ray.append(np.outer(u[:, 0], u[:, 0].conj()) if w[0] < 0 else np.zeros((d, d), complex))
        else:
            ray.append(-c)
    obj = abs(_objective(p, ray)) or 1.0
    return SdpSolution(status=DUAL_INFEASIBLE, ray=[r / obj for r in ray], dual=np.zeros(0))


def _optimal_ok(p, sol, tol):
    scale = 1.0 + np.max(np.abs(p.rhs), initial=0.0)
    for (d, kind), x, s in zip(p.blocks, sol.primal, _dual_slacks(p, sol.dual)):
        if kind == PSD:
            if linalg.lambda_min(x) < -tol * scale or linalg.lambda_min(s) < -tol * scale:
                return False
        elif np.max(np.abs(s), initial=0.0) > tol * scale:
            return False
    resid = _primal_residual(p, sol.primal)
    return resid <= tol * scale and sol.gap <= tol


def _primal_residual(p, primal):
    lhs = np.zeros(p.n_constraints)
    for (d, kind), a, x in zip(p.blocks, p.constraints, primal):
        if kind == PSD:
            lhs += np.real(np.tensordot(np.conj(a), x, axes=([1, 2], [0, 1])))
        else:
            lhs += a @ x
    return float(np.max(np.abs(lhs - p.rhs), initial=0.0))


def verify_certificate(p: SdpProblem, sol: SdpSolution, tol: float = DEFAULT_TOL) -> bool:
    """Re-check a solution independently of the engine, at 10x ``tol``.

    OPTIMAL: primal feasibility, dual slack PSD, relative gap.
    PRIMAL_INFEASIBLE: the Farkas vector y has ``sum y_i A_i`` negative
    semidefinite on PSD blocks, zero on FREE blocks, and ``b.y = 1``.
    DUAL_INFEASIBLE: the primal ray satisfies the homogeneous constraints and
    strictly improves the objective.
    """
    bound = 10.0 * tol
    if sol.status == OPTIMAL:
        scale = 1.0 + np.max(np.abs(p.rhs), initial=0.0)
        if len(sol.primal) != len(p.blocks):
            return False
        for (d, kind), x in zip(p.blocks, sol.primal):
            if kind == PSD and linalg.lambda_min(x) < -bound * scale:
                return False
        if _primal_residual(p, sol.primal) > bound * scale:
            return False
        y = np.asarray(sol.dual, dtype=float)
        for (d, kind), s in zip(p.blocks, _dual_slacks(p, y)):
            cscale = 1.0 + np.max(np.abs(s), initial=0.0)
            if kind == PSD:
                # MIN: C - sum y A must be PSD; MAX reverses the inequality
                s_eff = s if p.sense == "MIN" else -s
                if linalg.lambda_min(s_eff) < -bound * cscale:
                    return False
            elif np.max(np.abs(s), initial=0.0) > bound * cscale:
                return False
        pobj = _objective(p, sol.primal)
        dobj = float(p.rhs @ y)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        return gap <= bound
    if sol.status == PRIMAL_INFEASIBLE:
        y = sol.farkas
        if y is None or abs(float(p.rhs @ y) - 1.0) > bound:
            return False
        ynorm = 1.0 + np.max(np.abs(y), initial=0.0)
        for (d, kind), a in zip(p.blocks, p.constraints):
            comb = np.tensordot(y, a, axes=1)
            if kind == PSD:
                if -linalg.lambda_min(-comb) > bound * ynorm:
                    return False
            elif np.max(np.abs(comb), initial=0.0) > bound * ynorm:
                return False
        return True
    if sol.status == DUAL_INFEASIBLE:
        ray = sol.ray
        if ray is None:
            return False
        for (d, kind), x in zip(p.blocks, ray):
            if kind == PSD and linalg.lambda_min(x) < -bound:
                return False
        # homogeneous: <A_i, ray> = 0
        hom = _primal_residual(dataclasses.replace(p, rhs=np.zeros_like(p.rhs)), ray) if p.n_constraints else 0.0
        return hom <= bound and _sign(p) * _objective(p, ray) < 0
    return False


def dump_triplets(p: SdpProblem) -> str:
    """Plain-text sparse dump: header lines, then ``block row col re im`` per nonzero.

    Section ``c`` holds the objective, section ``a <i> <rhs>`` constraint ``i``.
    FREE blocks use ``row = col``.
    """
    lines = [f"sense {p.sense}", "blocks " + " ".join(f"{d}:{k}" for d, k in p.blocks), "c"]

    def emit(mats):
        for b, ((d, kind), m) in enumerate(zip(p.blocks, mats)):
            if kind == PSD:
                r, c = np.nonzero(np.abs(m) > 0)
                for i, j in zip(r, c):
                    lines.append(f"{b} {i} {j} {m[i, j].real:.17g} {m[i, j].imag:.17g}")
            else:
                for i in np.nonzero(m)[0]:
                    lines.append(f"{b} {i} {i} {m[i]:.17g} 0")

    emit(p.objective)
    for i in range(p.n_constraints):
        mats, rhs = p.constraint_matrices(i)
        lines.append(f"a {i} {rhs:.17g}")
        emit(mats)
    return "\n".join(lines) + "\n"


def plant_instance(seed, sizes, n_constraints=None, degenerate=False):
    """Random SDP with a known optimum.

    ``sizes`` lists ``(dim, kind)`` blocks. Builds complementary ``X* >= 0``
    and slack ``S* >= 0`` (``X* S* = 0``) plus a dual point ``y*`` so that the
    optimum is exactly ``b.y*``. Returns ``(problem, optimum)``.
    """
    rng = np.random.default_rng(seed)
    sizes = [(int(d), k) for d, k in sizes]
    dof = sum(d * d if k == PSD else d for d, k in sizes)
    m = n_constraints if n_constraints is not None else min(max(1, dof // 2), 30)
    xs, ss = [], []
    for d, kind in sizes:
        if kind == PSD:
            u, _ = np.linalg.qr(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
            r = 0 if degenerate else int(rng.integers(1, d + 1))
            xd = np.zeros(d)
            sd = np.zeros(d)
            xd[:r] = rng.uniform(0.5, 2.0, r)
            sd[r:] = rng.uniform(0.5, 2.0, d - r)
            xs.append(u @ np.diag(xd) @ u.conj().T)
            ss.append(u @ np.diag(sd) @ u.conj().T)
        else:
            xs.append(np.zeros(d) if degenerate else rng.standard_normal(d))
            ss.append(np.zeros(d))
    cons = []
    for d, kind in sizes:
        if kind == PSD:
            cons.append(np.stack([linalg.random_hermitian(rng, d) for _ in range(m)]))
        else:
            cons.append(rng.standard_normal((m, d)))
    y = rng.standard_normal(m)
    objs, rhs = [], np.zeros(m)
    for (d, kind), a, x, s in zip(sizes, cons, xs, ss):
        objs.append(s + np.tensordot(y, a, axes=1))
        if kind == PSD:
            rhs += np.real(np.tensordot(np.conj(a), x, axes=([1, 2], [0, 1])))
        else:
            rhs += a @ x
    p = SdpProblem(blocks=sizes, objective=objs, constraints=cons, rhs=rhs, sense="MIN")
    return p, float(rhs @ y)


# -- helpers used by the cone oracles ---------------------------------------

@dataclass
class LmiResult:
    """Outcome of :func:`sup_lambda_min`."""

    status: str
    value: float  # sup over y of lambda_min(M0 + sum y_l G_l); +inf if unbounded
    y: np.ndarray  # maximizing coefficients (MEMBER-side certificate)
    density: np.ndarray  # X >= 0, tr X = 1, <G_l, X> = 0: upper-bound certificate
    upper: float  # <M0, density>, an upper bound on value
    lower: float  # lambda_min at y, a lower bound on value


def sup_lambda_min(m0, directions, cfg: SolverConfig = SolverConfig(), form="auto") -> LmiResult:
    """Compute ``sup_y lambda_min(m0 + sum_l y_l G_l)`` with two-sided certificates.

    Posed as: minimize ``<m0, X>`` over densities ``X`` orthogonal to every
    direction; its dual is the eigenvalue maximization. When the directions
    fill most of the space the density is instead parametrized over their
    orthogonal complement (``form="complement"``), which keeps the constraint
    count small. The returned ``lower``/``upper`` values are recomputed from
    the certificates with eigenvalue tests, so callers never need to trust
    the engine.
    """
    m0 = linalg.herm(m0, check=False)
    n = m0.shape[0]
    g = np.asarray(directions, dtype=complex).reshape(-1, n, n)
    if len(g):
        g = 0.5 * (g + np.conj(np.swapaxes(g, 1, 2)))
    if form == "auto":
        form = "complement" if len(g) > n * n // 2 else "direct"
    if form == "complement":
        return _sup_lambda_min_complement(m0, g, cfg)
    cons = np.concatenate([np.eye(n, dtype=complex)[None], g], axis=0)
    rhs = np.zeros(len(cons))
    rhs[0] = 1.0
    p = SdpProblem(blocks=[(n, PSD)], objective=[m0], constraints=[cons], rhs=rhs)
    sol = solve(p, cfg)
    if sol.status == PRIMAL_INFEASIBLE:
        # no density is orthogonal to the directions: they span a positive definite element
        return LmiResult(status="UNBOUNDED", value=float("inf"), y=-sol.farkas[1:],
                         density=None, upper=float("inf"), lower=float("inf"))
    if not sol.primal or sol.dual is None or len(sol.dual) != len(cons):
        return LmiResult(status=sol.status, value=float("nan"), y=np.zeros(len(g)), density=None,
                         upper=float("inf"), lower=-float("inf"))
    # dual multipliers enter as m0 - t I - sum y G >= 0, so the maximizer uses -y
    coeff = -np.asarray(sol.dual[1:], dtype=float)
    return _lmi_result(m0, g, coeff, sol.primal[0], sol.status)


def _lmi_result(m0, g, coeff, x, status):
    lower = linalg.lambda_min(m0 + np.tensordot(coeff, g, axes=1)) if len(g) else linalg.lambda_min(m0)
    x = _clean_density(x, g)
    upper = float(linalg.inner(m0, x)) if x is not None else float("inf")
    value = 0.5 * (lower + upper) if status == OPTIMAL else lower
    return LmiResult(status=status, value=value, y=coeff, density=x, upper=upper, lower=lower)


def _sup_lambda_min_complement(m0, g, cfg):
    n = m0.shape[0]
    k = linalg.complement(g, n) if len(g) else linalg.herm_basis(n)
    if len(k) == 0:
        # the directions span everything, including the identity
        return LmiResult(status="UNBOUNDED", value=float("inf"), y=_span_coeffs(g, np.eye(n)),
                         density=None, upper=float("inf"), lower=float("inf"))
    # densities X = sum z_s K_s; the FREE scalar carries the trace normalization
    tr = np.real(np.trace(k, axis1=1, axis2=2))
    p = SdpProblem(blocks=[(n, PSD), (1, FREE)], objective=[np.zeros((n, n)), np.ones(1)],
                   constraints=[-k, tr[:, None]], rhs=-linalg.inner(k, m0[None]))
    sol = solve(p, cfg)
    if sol.status == DUAL_INFEASIBLE:
        xr, tr_r = sol.ray
        return LmiResult(status="UNBOUNDED", value=float("inf"), y=_span_coeffs(g, xr - tr_r[0] * np.eye(n)),
                         density=None, upper=float("inf"), lower=float("inf"))
    if sol.status not in (OPTIMAL, STALLED) or not sol.primal or sol.dual is None:
        return LmiResult(status=sol.status, value=float("nan"), y=np.zeros(len(g)), density=None,
                         upper=float("inf"), lower=-float("inf"))
    x_psd, shift = sol.primal
    # X = m0 + shift I + sum c G at the optimum
    coeff = _span_coeffs(g, x_psd - m0 - shift[0] * np.eye(n)) if len(g) else np.zeros(0)
    density = np.tensordot(sol.dual, k, axes=1)
    return _lmi_result(m0, g, coeff, density, sol.status)


def _span_coeffs(g, h):
    if len(g) == 0:
        return np.zeros(0)
    vecs = np.concatenate([g.real.reshape(len(g), -1), g.imag.reshape(len(g), -1)], axis=1)
    hv = np.concatenate([np.real(h).ravel(), np.imag(h).ravel()])
    coef, *_ = np.linalg.lstsq(vecs.T, hv, rcond=None)
    return coef


def _clean_density(x, g):
    """Project a near-feasible density back onto ``<G_l, X> = 0`` and ``tr X = 1``."""
    if x is None:
        return None
    x = 0.5 * (x + x.conj().T)
    if len(g):
        vecs = np.concatenate([g.real.reshape(len(g), -1), g.imag.reshape(len(g), -1)], axis=1)
        xv = np.concatenate([x.real.ravel(), x.imag.ravel()])
        coef, *_ = np.linalg.lstsq(vecs.T, xv, rcond=None)
        xv = xv - vecs.T @ coef
        half = xv.size // 2
        x = (xv[:half] + 1j * xv[half:]).reshape(x.shape)
        x = 0.5 * (x + x.conj().T)
    tr = float(np.real(np.trace(x)))
    return x / tr if tr > 0 else x
