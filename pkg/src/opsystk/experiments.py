"""Harnesses that run the tensor oracles over catalogs of systems.

Every harness returns a :class:`Report`. Randomness is drawn from
``numpy.random.default_rng([seed, i])`` for instance ``i``, so reports do not
depend on scheduling; instances may run on a thread pool whose size is read
from ``OPSYSTK_THREADS``.
"""
from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import linalg, opsys, sdp, tensor
from .opsys import DEFAULT_TOL, MEMBER, NON_MEMBER, UNDECIDED, MatrixSystem, QuotientSystem
from .polyhedral import extreme_rays
from .tensor import TensorElement

# significant digits kept in reports; smaller magnitudes print as 0
DIGITS = 8


def threads():
    env = os.environ.get("OPSYSTK_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def instance_rng(seed, index):
    return np.random.default_rng([int(seed), int(index)])


def _run(fn, items):
    """Map ``fn`` over ``items`` on the thread pool, keeping input order."""
    n = threads()
    if n == 1 or len(items) <= 1:
        return [fn(i, it) for i, it in enumerate(items)]
    with ThreadPoolExecutor(max_workers=n) as pool:
        futures = [pool.submit(fn, i, it) for i, it in enumerate(items)]
        return [f.result() for f in futures]


# -- catalogs ------------------------------------------------------------------

@dataclass
class Catalog:
    """Named matrix systems and quotients."""

    entries: dict = field(default_factory=dict)

    def add(self, name, system):
        system.name = name
        self.entries[name] = system
        return system

    def __getitem__(self, name):
        return self.entries[name]

    def __contains__(self, name):
        return name in self.entries

    def names(self):
        return list(self.entries)

    def matrix_systems(self):
        return [(k, v) for k, v in self.entries.items() if isinstance(v, MatrixSystem)]

    def quotients(self):
        return [(k, v) for k, v in self.entries.items() if isinstance(v, QuotientSystem)]

    def validate(self):
        """Re-check basis independence and nullity of every entry."""
        bad = []
        for name, s in self.entries.items():
            if isinstance(s, MatrixSystem):
                if len(linalg.orthonormalize(s.basis)) != s.dim:
                    bad.append(name)
            elif s.null.dim:
                ok, _ = opsys.is_null_subspace(s.n, s.null.basis)
                if not ok:
                    bad.append(name)
        return bad

    @classmethod
    def builtin(cls, seed=0, random_count=3):
        c = cls()
        for n in range(1, 5):
            c.add(f"M{n}", opsys.full_algebra(n))
        for n in range(1, 9):
            c.add(f"l{n}", opsys.ell_inf(n))
        for n in (4, 6, 8):
            c.add(f"W{n}", opsys.make_W(n))
        c.add("W23", opsys.make_W23())
        c.add("l6/J", opsys.j6())
        for i in range(random_count):
            rng = instance_rng(seed, i)
            c.add(f"rand{i}", opsys.random_matrix_system(rng, 3, 4))
            c.add(f"M3/J{i}", opsys.random_quotient(rng, 3, 2))
            c.add(f"l4/J{i}", opsys.random_quotient(rng, 4, 1, parent="diag"))
        return c


def random_quotients(n, count, seed, k=None, parent="full"):
    out = []
    for i in range(count):
        rng = instance_rng(seed, i)
        kk = k if k is not None else int(rng.integers(1, n))
        out.append((f"{'M' if parent == 'full' else 'l'}{n}/J#{i}", opsys.random_quotient(rng, n, kk, parent)))
    return out


# -- reports ---------------------------------------------------------------------

def _canon(v):
    if isinstance(v, dict):
        return {str(k): _canon(x) for k, x in sorted(v.items(), key=lambda kv: str(kv[0]))}
    if isinstance(v, (list, tuple)):
        return [_canon(x) for x in v]
    if isinstance(v, np.ndarray):
        if v.size and np.issubdtype(v.dtype, np.number):
            # rounding noise far below the array's scale is not part of the result
            v = np.where(np.abs(v) < 1e-12 * max(1.0, float(np.abs(v).max())), 0, v)
        return _canon(v.tolist())
    if isinstance(v, (np.floating, float)):
        f = float(v)
        if not np.isfinite(f):
            return str(f)
        if abs(f) < 10.0 ** -(2 * DIGITS):
            return 0.0
        return float(f"{f:.{DIGITS}g}")
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, complex):
        return [_canon(v.real), _canon(v.imag)]
    if hasattr(v, "images") and hasattr(v, "source"):
        return {"images": _canon(v.images)}
    if isinstance(v, (str, int, bool)) or v is None:
        return v
    return str(v)


def _canon_array(a):
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return [_canon(a.real), _canon(a.imag)]
    return _canon(a)


def certificate_digest(verdict):
    """SHA-256 over the verdict's status, route and rounded certificate."""
    cert = {}
    for k, v in (verdict.certificate or {}).items():
        cert[k] = _canon_array(v) if isinstance(v, np.ndarray) else _canon(v)
    payload = {"status": verdict.status, "route": verdict.route, "certificate": cert}
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


@dataclass
class Report:
    harness: str
    config: dict
    instances: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def to_dict(self, canonical=False):
        inst = []
        for i in self.instances:
            d = dict(i)
            if canonical:
                d["time_ms"] = 0
            inst.append(d)
        return _canon({"harness": self.harness, "config": self.config, "instances": inst,
                       "summary": self.summary})

    def to_json(self, canonical=False, indent=2):
        return json.dumps(self.to_dict(canonical), sort_keys=True, indent=indent)

    def digest(self):
        """Hash of the canonical form (wall-times zeroed)."""
        return hashlib.sha256(self.to_json(canonical=True).encode()).hexdigest()


def _record(iid, verdict, t0, **extra):
    rec = {"id": iid, "verdict": verdict.status, "grounded": bool(verdict.grounded),
           "certificate_digest": certificate_digest(verdict),
           "time_ms": round((time.perf_counter() - t0) * 1000.0, 3)}
    rec.update(extra)
    return rec


def _count(instances, key="verdict"):
    out = {MEMBER: 0, NON_MEMBER: 0, UNDECIDED: 0}
    for i in instances:
        out[i[key]] = out.get(i[key], 0) + 1
    return out


# -- sampling helpers ------------------------------------------------------------

def min_boundary_element(left, right, rng, level=1, spread=0.1, cfg=sdp.SolverConfig()):
    """Random element of ``M_m(left (x) right)`` moved to min-margin ``U(0, spread)``.

    Returns ``(x, margin)``; the margin is certified by the min oracle's
    maximizer, which moves with the shift.
    """
    c = rng.standard_normal((left.dim, right.dim, level, level)) \
        + 1j * rng.standard_normal((left.dim, right.dim, level, level))
    x = TensorElement(left, right, c)
    v = tensor.min_member(x, cfg=cfg)
    delta = float(rng.uniform(0.0, spread))
    return x.shifted(delta - v.lower), delta


# -- harnesses ---------------------------------------------------------------------

def ordering_scan(pairs, count=50, seed=0, tol=DEFAULT_TOL, cap=2):
    """Check ``max => min`` on sampled max generators for each ``(name, left, right)``."""
    items = []
    for pi, (name, left, right) in enumerate(pairs):
        for j in range(count):
            items.append((pi, name, left, right, j))

    def one(i, item):
        pi, name, left, right, j = item
        t0 = time.perf_counter()
        x = tensor.sample_max_generators(left, right, 1, seed=[seed, pi, j], cap=cap)[0]
        v = tensor.min_member(x, tol)
        return _record(f"{name}#{j}", v, t0, pair=name)

    inst = _run(one, items)
    counts = _count(inst)
    summary = {"generators": len(inst), "violations": counts[NON_MEMBER], "undecided": counts[UNDECIDED],
               "pairs": len(pairs)}
    return Report("ordering", {"count": count, "seed": seed, "tol": tol, "cap": cap,
                               "pairs": [p[0] for p in pairs]}, inst, summary)


def wep_scan(system, quotients, levels=(1,), samples=20, tol=DEFAULT_TOL, seed=0):
    """Sample min-positive elements of ``S (x) M_n/J`` and test max membership."""
    items = [(qi, qname, q, m, s) for qi, (qname, q) in enumerate(quotients) for m in levels
             for s in range(samples)]

    def one(i, item):
        qi, qname, q, m, s = item
        t0 = time.perf_counter()
        rng = instance_rng(seed, i)
        x, margin = min_boundary_element(system, q, rng, m)
        v = tensor.max_member(x, tol)
        return _record(f"{qname}/L{m}/{s}", v, t0, quotient=qname, level=m, min_margin=margin)

    inst = _run(one, items)
    counts = _count(inst)
    n = len(inst)
    summary = {"samples": n, "min_member": n, "max_member": counts[MEMBER],
               "agreement": counts[MEMBER] / n if n else 1.0, "undecided": counts[UNDECIDED],
               "witnesses": counts[NON_MEMBER]}
    cfg = {"system": system.name, "levels": list(levels), "samples": samples, "tol": tol, "seed": seed,
           "quotients": [q[0] for q in quotients]}
    return Report("wep", cfg, inst, summary)


def lift_scan(system, quotients, samples=20, eps=1e-6, tol=DEFAULT_TOL, seed=0):
    """Push random PSD elements of ``S (x) P`` to ``S (x) P/J`` and lift them back."""
    items = [(qi, qname, q, s) for qi, (qname, q) in enumerate(quotients) for s in range(samples)]

    def one(i, item):
        qi, qname, q, s = item
        t0 = time.perf_counter()
        rng = instance_rng(seed, i)
        x = pushforward_psd(system, q, rng)
        v = tensor.positive_lift_exists(x, eps, tol)
        return _record(f"{qname}/{s}", v, t0, quotient=qname)

    inst = _run(one, items)
    counts = _count(inst)
    summary = {"samples": len(inst), "lifted": counts[MEMBER], "non_member": counts[NON_MEMBER],
               "undecided": counts[UNDECIDED]}
    return Report("lift", {"system": system.name, "samples": samples, "eps": eps, "tol": tol, "seed": seed,
                           "quotients": [q[0] for q in quotients]}, inst, summary)


def pushforward_psd(system, q, rng, rank=None, terms=3):
    """Image in ``S (x) P/J`` of a random positive element of ``S (x) P``.

    For full ``S`` the preimage is a random PSD matrix (pinched when ``S`` is
    abelian); otherwise it is a sum of ``terms`` products ``s (x) p`` with
    ``s`` positive in ``S`` and ``p`` PSD in ``P``.
    """
    k, n = system.n, q.n
    if system.is_full:
        u = linalg.random_psd(rng, k * n, rank)
        u4 = u.reshape(k, n, k, n)
        if q.parent == "diag":
            u4 = u4 * np.eye(n)[None, :, None, :]
        if system.abelian:
            u4 = u4 * np.eye(k)[:, None, :, None]
        # U = sum_{ab} e_ab (x) U_ab: split each P-entry over the S basis
        sc = system.coords(np.transpose(u4, (1, 3, 0, 2)))  # (n, n, dS)
        coeffs = q.coords(np.moveaxis(sc, -1, 0))
        return TensorElement(system, q, np.real(coeffs))
    c = np.zeros((system.dim, q.dim))
    for _ in range(terms):
        s = tensor.sample_positive(system, rng)[:, 0, 0].real
        pm = linalg.random_psd(rng, n, rank)
        if q.parent == "diag":
            pm = np.diag(np.diag(pm))
        c += np.outer(s, np.real(q.coords(pm)))
    return TensorElement(system, q, c)


def sample_ucp_map(source, target, rng, cfg=sdp.SolverConfig()):
    """Random ucp map ``source -> target`` (both matrix systems) from a Choi SDP.

    Minimizes a random linear objective over Choi matrices of ucp maps
    ``M_k -> M_N`` whose values on ``source`` lie in ``target``.
    """
    k, nt = source.n, target.n
    size = k * nt
    hb = linalg.herm_basis(nt)
    cons, rhs = [], []
    for e in hb:
        cons.append(np.kron(np.eye(k), e))
        rhs.append(np.real(np.trace(e)))
    comp = linalg.complement(target.basis, nt)
    for b in source.basis:
        for c in comp:
            cons.append(np.kron(b.T, c))
            rhs.append(0.0)
    a = np.array(cons)
    keep = sdp._independent_rows(np.concatenate([a.real.reshape(len(a), -1), a.imag.reshape(len(a), -1)], 1))
    a, rhs = a[keep], np.asarray(rhs)[keep]
    p = sdp.SdpProblem(blocks=[(size, sdp.PSD)], objective=[linalg.random_hermitian(rng, size)],
                       constraints=[a], rhs=rhs)
    sol = sdp.solve(p, cfg)
    if sol.status != sdp.OPTIMAL:
        return None
    c4 = sol.primal[0].reshape(k, nt, k, nt)
    mats = np.einsum("pab,aibj->pij", source.basis, c4)
    return tensor.CpMapCandidate.from_matrices(source, target, mats)


def wri_scan(s1, s2, targets, samples=5, tol=DEFAULT_TOL, seed=0):
    """Sample ucp maps ``S1 -> R`` and ask whether they extend to ``S2``."""
    items = [(ri, rname, r, s) for ri, (rname, r) in enumerate(targets) for s in range(samples)]

    def one(i, item):
        ri, rname, r, s = item
        t0 = time.perf_counter()
        rng = instance_rng(seed, i)
        phi = sample_ucp_map(s1, r, rng)
        if phi is None:
            v = opsys.Verdict(UNDECIDED, False, route="sampling")
            return _record(f"{rname}/{s}", v, t0, target=rname, reverified=None)
        v = tensor.ucp_extension_exists(s1, s2, phi, tol)
        ok = verify_extension_verdict(s1, s2, phi, v, tol)
        return _record(f"{rname}/{s}", v, t0, target=rname, reverified=ok)

    inst = _run(one, items)
    counts = _count(inst)
    n = len(inst)
    summary = {"samples": n, "extensions": counts[MEMBER], "failures": counts[NON_MEMBER],
               "undecided": counts[UNDECIDED], "fraction": counts[MEMBER] / n if n else 1.0,
               "all_reverified": all(i["reverified"] for i in inst)}
    cfg = {"s1": s1.name, "s2": s2.name, "samples": samples, "tol": tol, "seed": seed,
           "targets": [t[0] for t in targets]}
    return Report("wri", cfg, inst, summary)


def verify_extension_verdict(s1, s2, phi, v, tol=DEFAULT_TOL):
    """Re-check an extension verdict from its certificate alone."""
    if v.status == MEMBER:
        ext = v.certificate.get("extension")
        if ext is None:
            return False
        # agrees with phi on S1 and is completely positive
        img1 = np.tensordot(np.real(s2.coords(s1.basis)), ext.image_matrices(), axes=1)
        if np.max(np.abs(img1 - phi.image_matrices()), initial=0.0) > 1e-6:
            return False
        return tensor.cp_check(ext, tol=10 * tol).status == MEMBER
    if v.status == NON_MEMBER:
        x = v.certificate["density"]
        m0, _ = opsys.choi_lmi(s1, phi.image_matrices())
        k, nt = s1.n, phi.target.n
        q1 = linalg.orthonormalize(s1.basis)
        o2 = linalg.orthonormalize(list(q1) + list(s2.basis))[len(q1):]
        checks = [np.einsum("lba,sij->lsaibj", o2, phi.target.basis).reshape(-1, k * nt, k * nt)] if len(o2) else []
        o3 = s2.complement()
        if len(o3):
            checks.append(np.einsum("lba,tij->ltaibj", o3, linalg.herm_basis(nt)).reshape(-1, k * nt, k * nt))
        orth = max((np.max(np.abs(linalg.inner(c, x[None])), initial=0.0) for c in checks), default=0.0)
        return bool(linalg.lambda_min(x) >= -1e-8 and orth <= 1e-7 and linalg.inner(m0, x) * k < -tol)
    return v.status == UNDECIDED


def _pair_scan(harness, system, others, levels, samples, tol, seed, cap, lp=True):
    items = [(oi, oname, o, m, s) for oi, (oname, o) in enumerate(others) for m in levels for s in range(samples)]

    def one(i, item):
        oi, oname, o, m, s = item
        t0 = time.perf_counter()
        rng = instance_rng(seed, i)
        x, margin = min_boundary_element(system, o, rng, m)
        v = tensor.max_member(x, tol, cap=cap, seed=i)
        extra = {"other": oname, "level": m, "min_margin": margin}
        if lp and m == 1 and _abelian(system) and _abelian(o) and v.status == UNDECIDED:
            gm = generated_margin(x)
            extra["lp_generated_margin"] = gm
            if gm >= -tol:
                v = opsys.Verdict(MEMBER, True, gm, v.upper, "lp-generated", {"margin": gm})
        return _record(f"{oname}/L{m}/{s}", v, t0, **extra)

    inst = _run(one, items)
    counts = _count(inst)
    n = len(inst)
    summary = {"samples": n, "agreement": counts[MEMBER] / n if n else 1.0, "gaps": counts[UNDECIDED],
               "witnesses": counts[NON_MEMBER]}
    cfg = {"system": system.name, "levels": list(levels), "samples": samples, "tol": tol, "seed": seed,
           "cap": cap, "others": [o[0] for o in others]}
    return Report(harness, cfg, inst, summary)


def np_test(system, which="W6", levels=(1,), samples=10, tol=DEFAULT_TOL, seed=0, cap=2):
    """Compare min and max on ``S (x) W6`` (or the 4-dimensional ``W23``)."""
    w = opsys.make_W(6) if which == "W6" else opsys.make_W23()
    return _pair_scan("np", system, [(w.name, w)], levels, samples, tol, seed, cap)


def quasi_nuclear_scan(system, catalog, levels=(1,), samples=5, tol=DEFAULT_TOL, seed=0, cap=2):
    """Compare min and max on ``S (x) R`` over a catalog of matrix systems ``R``."""
    return _pair_scan("quasi", system, list(catalog), levels, samples, tol, seed, cap)


def _abelian(s):
    return isinstance(s, MatrixSystem) and s.abelian


# -- exact polyhedral layer ---------------------------------------------------------

def lp_extreme_rays(system, cap=12):
    return extreme_rays(system, cap)


def _diag_vectors(s):
    return np.real(np.diagonal(s.basis, axis1=1, axis2=2))


def _ambient(x):
    """Level-1 element of ``l_k (x) l_l`` as a vector of length ``k*l``."""
    a, b = _diag_vectors(x.left), _diag_vectors(x.right)
    c = np.real(x.coeffs[:, :, 0, 0])
    return np.einsum("pq,pi,qj->ij", c, a, b).ravel()


def product_rays(left, right):
    ra = [np.asarray(r, float) for r in extreme_rays(left)]
    rb = [np.asarray(r, float) for r in extreme_rays(right)]
    return np.array([np.kron(a, b) for a in ra for b in rb])


def cone_margin(v, rays, unit):
    """``max s`` with ``v - s*unit`` in the conic hull of ``rays`` (LP), plus a dual functional."""
    k = len(rays)
    # variables (lambda, s): rays^T lambda + s unit = v, lambda >= 0
    a_eq = np.hstack([rays.T, unit[:, None]])
    res = linprog(np.concatenate([np.zeros(k), [-1.0]]), A_eq=a_eq, b_eq=v,
                  bounds=[(0, None)] * k + [(None, None)], method="highs")
    if res.status != 0:
        return -np.inf, None
    f = -res.eqlin.marginals  # feasible dual: f.r >= 0 on rays, f.unit = 1
    return float(res.x[-1]), f


def cone_separate(v, rays):
    """Farkas LP: ``min f.v`` over ``f`` in a box with ``f.r >= 0`` on every ray.

    A negative optimum certifies that ``v`` lies outside the conic hull.
    """
    d = len(v)
    res = linprog(v, A_ub=-rays, b_ub=np.zeros(len(rays)), bounds=[(-1.0, 1.0)] * d, method="highs")
    if res.status != 0:
        return 0.0, None
    return float(res.fun), res.x


def generated_margin(x):
    rays = product_rays(x.left, x.right)
    unit = np.ones(x.left.n * x.right.n)
    return cone_margin(_ambient(x), rays, unit)[0]


def lp_cross_validate(left, right, samples=100, tol=DEFAULT_TOL, seed=0, cap=2, gap=None):
    """Compare the SDP oracles with the exact polyhedral layer at level 1.

    A mismatch is any of: the SDP min verdict differs from the entrywise LP
    test; the SDP max verdict is NON_MEMBER while the generated cone
    contains the element; the SDP max verdict is MEMBER while the LP min
    test fails; the generated cone contains the element but the SDP max
    oracle does not say MEMBER.

    ``gap`` controls the exact min-versus-generated comparison; by default it
    runs when the ambient dimension is at most 16 (exact enumeration grows
    quickly beyond that).
    """
    if not (_abelian(left) and _abelian(right)):
        raise ValueError("lp_cross_validate needs two function systems")
    rays = product_rays(left, right)
    unit = np.ones(left.n * right.n)
    a, b = _diag_vectors(left), _diag_vectors(right)
    kr = np.einsum("pi,qj->pqij", a, b).reshape(left.dim * right.dim, -1)

    def to_coeffs(v):
        c, *_ = np.linalg.lstsq(kr.T, v, rcond=None)
        return c.reshape(left.dim, right.dim)

    def one(i, _):
        t0 = time.perf_counter()
        rng = instance_rng(seed, i)
        kind = i % 3
        if i == 0:
            v = unit.copy()
        elif kind == 0:
            c = rng.standard_normal((left.dim, right.dim))
            v = kr.T @ c.ravel()
        else:
            w = rng.exponential(size=len(rays)) * (rng.random(len(rays)) < 0.5)
            v = rays.T @ w
        if i:
            # place near the min boundary, on either side
            delta = float(rng.choice([-1, 1]) * rng.uniform(10 * tol, 0.1))
            v = v / max(np.abs(v).max(), 1e-12)
            v = v + (delta - v.min()) * unit if kind == 0 or rng.random() < 0.5 else v
        x = TensorElement(left, right, to_coeffs(v))
        lp_min = MEMBER if v.min() >= -tol else NON_MEMBER
        gm, _ = cone_margin(v, rays, unit)
        lp_gen = MEMBER if gm >= -tol else NON_MEMBER
        vmin = tensor.min_member(x, tol)
        vmax = tensor.max_member(x, tol, cap=cap, seed=i)
        bad = []
        if vmin.status != lp_min:
            bad.append("min")
        if vmax.status == NON_MEMBER and lp_gen == MEMBER:
            bad.append("max-non-but-generated")
        if vmax.status == MEMBER and lp_min == NON_MEMBER:
            bad.append("max-member-but-not-min")
        if lp_gen == MEMBER and vmax.status != MEMBER:
            bad.append("generated-not-max")
        return _record(f"x{i}", vmax, t0, lp_min=lp_min, lp_generated=lp_gen, sdp_min=vmin.status,
                       mismatch=bad)

    inst = _run(one, list(range(samples)))
    if gap is None:
        gap = left.n * right.n <= 16
    summary = {"samples": len(inst), "mismatches": sum(1 for i in inst if i["mismatch"])}
    found = lp_cone_gap(left, right) if gap else None
    summary["min_equals_generated"] = (found is None) if gap else "skipped"
    gap = found
    if gap is not None:
        summary["gap_vector"] = gap["x"]
        summary["gap_functional"] = gap["f"]
        summary["gap_margin"] = gap["margin"]
    return Report("lp_cross_validate", {"left": left.name, "right": right.name, "samples": samples,
                                        "tol": tol, "seed": seed, "cap": cap}, inst, summary)


def lp_cone_gap(left, right):
    """Exact comparison of the level-1 min cone with the ray-product cone.

    The min cone of ``S (x) T`` inside ``l_k (x) l_l`` is polyhedral; its rays
    are enumerated exactly, and any ray outside the product cone is a gap
    vector, returned with its separating functional.
    """
    from .polyhedral import cone_rays, rational_span
    a, b = _diag_vectors(left), _diag_vectors(right)
    span = np.einsum("pi,qj->pqij", a, b).reshape(left.dim * right.dim, -1)
    rows, pivots = rational_span(span)
    prods = product_rays(left, right)
    unit = np.ones(left.n * right.n)
    for r in cone_rays(rows, pivots):
        v = np.asarray(r, float)
        # s < 0 would mean v is not generated; compare against the unit scale
        m, f = cone_margin(v, prods, unit)
        if m < -1e-9:
            return {"x": v, "f": f, "margin": m}
    return None


# -- witness search -------------------------------------------------------------------

@dataclass
class ConePair:
    """Planted polyhedral pair: an outer cone and an inner cone from a subset of its rays."""

    outer_rays: np.ndarray
    inner_rays: np.ndarray
    unit: np.ndarray


def planted_cone_pair(left, right, drop=1, seed=0):
    """Outer = level-1 min cone of two function systems; inner drops ``drop`` of its rays."""
    from .polyhedral import cone_rays, rational_span
    a, b = _diag_vectors(left), _diag_vectors(right)
    span = np.einsum("pi,qj->pqij", a, b).reshape(left.dim * right.dim, -1)
    rows, pivots = rational_span(span)
    outer = np.array(cone_rays(rows, pivots), dtype=float)
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.permutation(len(outer))[drop:])
    return ConePair(outer, outer[keep], np.ones(outer.shape[1]))


@dataclass
class WitnessResult:
    found: bool
    x: np.ndarray = None
    f: np.ndarray = None
    attempts: int = 0
    report: Report = None


def _verify_linear_witness(x, f, generators, tol):
    return bool(f @ x < -tol and np.min(generators @ f) >= -1e-9)


def witness_search(left=None, right=None, budget=50, seed=0, tol=DEFAULT_TOL, cone_pair=None,
                   verify_samples=1000, cap=2):
    """Look for an element of the min cone that the max oracle separates.

    Alternates sampling min-positive elements and solving the max dual SDP;
    a witness ``(x, f)`` is returned only after ``f(x) < -tol`` and ``f >= 0``
    on ``verify_samples`` sampled max generators are re-checked. With
    ``cone_pair`` the same loop runs on a planted polyhedral pair.
    """
    inst = []
    config = {"budget": budget, "seed": seed, "tol": tol, "verify_samples": verify_samples,
              "left": getattr(left, "name", None), "right": getattr(right, "name", None),
              "planted": cone_pair is not None}
    for i in range(budget):
        t0 = time.perf_counter()
        rng = instance_rng(seed, i)
        if cone_pair is not None:
            w = rng.exponential(size=len(cone_pair.outer_rays))
            w *= rng.random(len(w)) < 0.5
            x = cone_pair.outer_rays.T @ w
            m, f = cone_separate(x, cone_pair.inner_rays)
            if m < -tol and f is not None:
                gens = np.vstack([cone_pair.inner_rays,
                                  (rng.exponential(size=(verify_samples, len(cone_pair.inner_rays)))
                                   @ cone_pair.inner_rays)])
                ok = _verify_linear_witness(x, f, gens, tol)
                v = opsys.Verdict(NON_MEMBER, True, m, float(f @ x), "planted", {"f": f, "x": x})
                inst.append(_record(f"attempt{i}", v, t0, reverified=ok))
                if ok:
                    return WitnessResult(True, x, f, i + 1, _witness_report(config, inst, True))
            else:
                v = opsys.Verdict(MEMBER, True, m, np.nan, "planted")
                inst.append(_record(f"attempt{i}", v, t0))
            continue
        x, _ = min_boundary_element(left, right, rng)
        v = tensor.max_member(x, tol, cap=cap, seed=i)
        ok = None
        if v.status == NON_MEMBER and "density" in v.certificate:
            ok = verify_separation(x, v, verify_samples, seed=[seed, i], cap=cap)
        inst.append(_record(f"attempt{i}", v, t0, reverified=ok))
        if ok:
            return WitnessResult(True, x, v.certificate["density"], i + 1, _witness_report(config, inst, True))
    return WitnessResult(False, attempts=budget, report=_witness_report(config, inst, False))


def _witness_report(config, inst, found):
    counts = _count(inst)
    return Report("witness_search", config, inst,
                  {"found": found, "attempts": len(inst), "max_member": counts[MEMBER],
                   "separated": counts[NON_MEMBER], "undecided": counts[UNDECIDED],
                   "result": "FOUND" if found else "NONE_FOUND"})


def verify_separation(x, verdict, samples=1000, seed=0, cap=2, tol=DEFAULT_TOL):
    """``f(x) < -tol`` and ``f >= 0`` on sampled max generators of the same level.

    Routes that flip the tensorands report the density in the flipped
    ordering, so the generators are flipped to match.
    """
    dens = verdict.certificate["density"]
    flipped = verdict.route.endswith("+flip")
    xx = x.flip() if flipped else x
    if tensor.functional_value(dens, xx) >= -tol:
        return False
    gens = tensor.sample_max_generators(xx.left, xx.right, samples, seed=seed, cap=cap, level=xx.level)
    return all(tensor.functional_value(dens, g) >= -1e-7 for g in gens)
