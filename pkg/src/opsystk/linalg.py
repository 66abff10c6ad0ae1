"""Dense complex Hermitian linear algebra.

Hermitian matrices are plain ``numpy`` arrays of shape ``(n, n)``; spans and
bases are stacked arrays of shape ``(d, n, n)``. The real inner product used
throughout is ``<A, B> = Re tr(A* B)``.
"""
from __future__ import annotations

import numpy as np

from .errors import ConvergenceFailure, EmptySpan

PSD_TOL = 1e-8
RANK_TOL = 1e-10
MAX_SWEEPS = 100


def herm(a, check=True, atol=1e-9):
    """Return ``a`` as a complex Hermitian array, symmetrizing away round-off."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if check:
        err = np.max(np.abs(a - a.conj().T), initial=0.0)
        if err > atol * (1.0 + np.max(np.abs(a), initial=0.0)):
            raise ValueError(f"matrix is not Hermitian (asymmetry {err:.3g})")
    return 0.5 * (a + a.conj().T)


def inner(a, b):
    """Real trace inner product ``Re tr(a* b)``; broadcasts over leading axes."""
    return np.real(np.sum(np.conj(a) * b, axis=(-2, -1)))


def herm_basis(n):
    """Orthonormal basis of the n x n Hermitian matrices, shape ``(n*n, n, n)``.

    Order: diagonal units, then ``(e_ij + e_ji)/sqrt2`` and
    ``i(e_ij - e_ji)/sqrt2`` for ``i < j``.
    """
    out = np.zeros((n * n, n, n), dtype=complex)
    k = 0
    for i in range(n):
        out[k, i, i] = 1.0
        k += 1
    s = 1.0 / np.sqrt(2.0)
    for i in range(n):
        for j in range(i + 1, n):
            out[k, i, j] = out[k, j, i] = s
            k += 1
            out[k, i, j] = 1j * s
            out[k, j, i] = -1j * s
            k += 1
    return out


def hvec(h):
    """Real coordinates of Hermitian ``h`` against :func:`herm_basis` (isometric)."""
    h = np.asarray(h)
    n = h.shape[-1]
    iu, ju = np.triu_indices(n, 1)
    diag = np.real(np.diagonal(h, axis1=-2, axis2=-1))
    off = h[..., iu, ju]
    pairs = np.stack([np.sqrt(2.0) * off.real, np.sqrt(2.0) * off.imag], axis=-1)
    return np.concatenate([diag, pairs.reshape(*h.shape[:-2], -1)], axis=-1)


def hunvec(v, n):
    """Inverse of :func:`hvec`."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (n, n), dtype=complex)
    idx = np.arange(n)
    out[..., idx, idx] = v[..., :n]
    iu, ju = np.triu_indices(n, 1)
    pairs = v[..., n:].reshape(*v.shape[:-1], -1, 2) / np.sqrt(2.0)
    vals = pairs[..., 0] + 1j * pairs[..., 1]
    out[..., iu, ju] = vals
    out[..., ju, iu] = np.conj(vals)
    return out


def realify(h):
    """Real symmetric embedding ``[[A, -B], [B, A]]`` of ``h = A + iB``."""
    h = np.asarray(h, dtype=complex)
    a, b = h.real, h.imag
    return np.block([[a, -b], [b, a]])


def _jacobi_sym(a, tol, max_sweeps):
    """Cyclic Jacobi on a real symmetric matrix; returns (eigenvalues, vectors)."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(np.linalg.norm(a), 1.0)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= tol * scale:
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
    off = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
    if off <= tol * scale:
        return np.diag(a).copy(), v
    raise ConvergenceFailure("Jacobi sweeps exhausted", residual=float(off))


def _complex_vectors(h, w2, v2, tol):
    """Recover complex eigenvectors of ``h`` from those of ``realify(h)``."""
    n = h.shape[0]
    z = v2[:n] + 1j * v2[n:]
    w = np.empty(n)
    u = np.empty((n, n), dtype=complex)
    gap = max(1e3 * tol, 1e-7) * max(1.0, np.max(np.abs(w2), initial=0.0))
    col = 0
    i = 0
    while i < 2 * n:
        j = i + 1
        while j < 2 * n and w2[j] - w2[j - 1] <= gap:
            j += 1
        k = (j - i) // 2
        left, sv, _ = np.linalg.svd(z[:, i:j], full_matrices=False)
        u[:, col:col + k] = left[:, :k]
        w[col:col + k] = np.mean(w2[i:j])
        col += k
        i = j
    if col != n:
        raise ConvergenceFailure("eigenvalue clusters did not pair up", residual=float(col - n))
    # one Rayleigh-Ritz pass restores orthonormality inside clusters
    q, _ = np.linalg.qr(u)
    small = q.conj().T @ h @ q
    ws, vs = np.linalg.eigh(0.5 * (small + small.conj().T))
    return ws, q @ vs


def eig_herm(h, tol=1e-12, method="lapack"):
    """Eigen-decomposition of a Hermitian matrix.

    Returns ``(eigenvalues ascending, unitary U)`` with ``U diag(w) U* = h``.
    ``method="jacobi"`` runs cyclic Jacobi on the realified matrix; the
    default defers to LAPACK, which is what the oracles use on hot paths.
    """
    h = herm(h, check=False)
    if method == "lapack":
        w, u = np.linalg.eigh(h)
    elif method == "jacobi":
        w2, v2 = _jacobi_sym(realify(h), tol, MAX_SWEEPS)
        order = np.argsort(w2, kind="stable")
        w, u = _complex_vectors(h, w2[order], v2[:, order], tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    resid = np.linalg.norm(u @ np.diag(w) @ u.conj().T - h)
    bound = max(tol, 1e-10) * (1.0 + np.linalg.norm(h)) * max(1, h.shape[0])
    if resid > bound:
        raise ConvergenceFailure("reconstruction check failed", residual=float(resid))
    return w, u


def lambda_min(h):
    return float(np.linalg.eigvalsh(herm(h, check=False))[0])


def is_psd(h, tol=PSD_TOL):
    return lambda_min(h) >= -tol


def _as_vectors(span):
    span = np.asarray(span, dtype=complex)
    return np.concatenate([span.real.reshape(len(span), -1), span.imag.reshape(len(span), -1)], axis=1)


def orthonormalize(span, rank_tol=RANK_TOL):
    """Orthonormal (trace inner product) Hermitian basis of the real span.

    Modified Gram-Schmidt in input order, applied twice; inputs whose residual
    falls below ``rank_tol`` relative to their own norm are dropped.
    """
    span = [np.asarray(s, dtype=complex) for s in span]
    if not span:
        raise EmptySpan("cannot orthonormalize an empty list")
    n = span[0].shape[0]
    out = []
    for s in span:
        s = 0.5 * (s + s.conj().T)
        norm0 = np.sqrt(inner(s, s))
        r = s.copy()
        for _ in range(2):
            for q in out:
                r = r - inner(q, r) * q
        nr = np.sqrt(inner(r, r))
        if nr <= rank_tol * max(norm0, 1.0) or nr == 0.0:
            continue
        out.append(r / nr)
    if not out:
        return np.zeros((0, n, n), dtype=complex)
    return np.stack(out)


def project_onto_span(h, span):
    """Orthogonal projection of ``h`` onto a real span of Hermitian matrices.

    Returns ``(projection, residual_norm)``.
    """
    h = np.asarray(h, dtype=complex)
    if len(span) == 0:
        return np.zeros_like(h), float(np.sqrt(inner(h, h)))
    q = orthonormalize(span)
    coeffs = inner(q, h[None])
    proj = np.tensordot(coeffs, q, axes=1) if len(q) else np.zeros_like(h)
    r = h - proj
    return proj, float(np.sqrt(inner(r, r)))


def complement(span, n, rank_tol=RANK_TOL):
    """Orthonormal basis of the orthogonal complement of ``span`` in Herm(M_n)."""
    full = herm_basis(n)
    if len(span) == 0:
        return full
    q = orthonormalize(span, rank_tol)
    vecs = _as_vectors(q)
    fv = _as_vectors(full)
    # project the standard basis off the span, then keep an orthonormal set
    resid = fv - (fv @ vecs.T) @ vecs
    u, sv, _ = np.linalg.svd(resid.T, full_matrices=False)
    k = n * n - len(q)
    cols = u[:, :k].T
    m = n * n
    return cols[:, :m].reshape(k, n, n) + 1j * cols[:, m:].reshape(k, n, n)


def coords(h, basis):
    """Coordinates of ``h`` in a (not necessarily orthonormal) Hermitian basis.

    Complex-linear, so it also splits non-Hermitian blocks; ``h`` may carry
    leading axes. The caller is responsible for ``h`` lying in the span.
    """
    basis = np.asarray(basis)
    gram = inner(basis[:, None], basis[None, :])
    h = np.asarray(h, dtype=complex)
    rhs = np.tensordot(h, np.conj(basis), axes=([-2, -1], [1, 2]))
    lead = rhs.shape[:-1]
    sol = np.linalg.solve(gram, rhs.reshape(-1, len(basis)).T).T
    return sol.reshape(lead + (len(basis),))


def random_hermitian(rng, n, scale=1.0):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (g + g.conj().T)


def random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    g = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return g @ g.conj().T
