"""Small numerical helpers shared by the DMD variants."""
from __future__ import annotations

import numpy as np

EPS = np.finfo(float).eps
DEFECTIVE_COND = 1e12


def hermitian_part(h):
    return 0.5 * (h + h.conj().T)


def normalize_phase(vecs):
    """Scale columns to unit norm with the largest-magnitude entry real positive."""
    vecs = np.array(vecs, dtype=complex, copy=True)
    if vecs.ndim == 1:
        return normalize_phase(vecs[:, None])[:, 0]
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        nrm = np.linalg.norm(col)
        if nrm == 0:
            continue
        k = int(np.argmax(np.abs(col)))
        vecs[:, j] = col * (abs(col[k]) / col[k]) / nrm
        vecs[k, j] = vecs[k, j].real
    return vecs


def eig_order(evals, decimals=12):
    """Indices sorting eigenvalues by descending modulus, then real, then imaginary part.

    Keys are rounded so that conjugate pairs whose moduli differ only by
    roundoff keep a stable (positive imaginary part first) order.
    """
    evals = np.asarray(evals)
    keys = (
        -np.round(evals.imag, decimals),
        -np.round(evals.real, decimals),
        -np.round(np.abs(evals), decimals),
    )
    return np.lexsort(keys)


def sqrt_clamped(x):
    return float(np.sqrt(max(float(np.real(x)), 0.0)))


def quadratic_residual(l_mat, k_mat, lam, v):
    """``sqrt(v^*[L - lam K^* - conj(lam) K + |lam|^2 I] v) / ||v||``."""
    v = np.asarray(v, dtype=complex)
    nv2 = np.vdot(v, v).real
    if nv2 <= 0:
        from .errors import DegenerateError
        raise DegenerateError("residual of the zero vector is undefined")
    kv = k_mat @ v
    val = (np.vdot(v, l_mat @ v)
           - lam * np.vdot(kv, v)
           - np.conj(lam) * np.vdot(v, kv)
           + abs(lam) ** 2 * nv2)
    return sqrt_clamped(val / nv2)


def eig_with_left(mat):
    """Eigen-triples of a real square matrix, ordered by :func:`eig_order`.

    Returns ``(evals, right, left)`` with ``mat @ right[:, j] = evals[j] right[:, j]``
    and ``left[:, j].conj() @ mat = evals[j] left[:, j].conj()``; columns are
    unit norm and phase-normalized. Also returns the condition number of the
    right eigenvector matrix.
    """
    import scipy.linalg

    evals, vl, vr = scipy.linalg.eig(mat, left=True, right=True)
    order = eig_order(evals)
    evals = evals[order]
    vr = normalize_phase(vr[:, order])
    vl = normalize_phase(vl[:, order])
    cond = np.linalg.cond(vr) if vr.size else 1.0
    return evals, vr, vl, float(cond)
