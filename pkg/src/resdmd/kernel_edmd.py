"""Kernelized EDMD with residuals attached to left eigenvectors.

With ``G = sqrt(W) S_XX sqrt(W)``, ``A = sqrt(W) S_YX sqrt(W)`` and the
leading eigenpairs ``G Q = Q Sigma^2`` the compressed Koopman matrix is

    K_hat = (Q Sigma^+)^T A (Q Sigma^+).

``K_hat^*`` solves the dual regression ``Psi_Y ~ Psi_X M`` in the implicit
feature space, where ``Psi_X^* Psi_X = I``. The residual of a left eigenpair
``v^* K_hat = lam v^*`` is ``||Psi_Y v - conj(lam) Psi_X v|| / ||v||`` and
needs one more Gram matrix, ``L_hat = (Q Sigma^+)^T S_YY (Q Sigma^+)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._linalg import (DEFECTIVE_COND, EPS, eig_with_left, hermitian_part,
                      normalize_phase, quadratic_residual, sqrt_clamped)
from .errors import ConfigurationError, DegenerateError, RankError
from .kernels import KernelSpec, gram
from .snapshot_io import SnapshotPairs


def _ro(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class KedmdResult:
    """Output of kernelized EDMD.

    ``right_vecs[:, j]`` and ``left_vecs[:, j]`` are unit right/left
    eigenvectors for ``eigenvalues[j]``; ``residuals[j]`` belongs to the left
    one.
    """

    q_hat: np.ndarray
    sigma_hat: np.ndarray
    k_hat: np.ndarray
    l_hat: np.ndarray
    eigenvalues: np.ndarray
    right_vecs: np.ndarray
    left_vecs: np.ndarray
    residuals: np.ndarray
    spec: Optional[KernelSpec] = None
    requested_rank: Optional[int] = None
    numerical_rank: int = 0
    defective: bool = False
    eigvec_cond: float = 1.0

    @property
    def rank(self) -> int:
        return self.sigma_hat.shape[0]

    @property
    def reduced(self) -> bool:
        return self.requested_rank is not None and self.requested_rank > self.rank

    @property
    def coeff_map(self):
        """``Q_hat Sigma_hat^+`` (M x r)."""
        return self.q_hat / self.sigma_hat

    def residual(self, lam, v) -> float:
        """Dual residual of an arbitrary candidate left pair ``(lam, v)``."""
        return quadratic_residual(self.l_hat, self.k_hat, lam, v)

    def truncate(self, k: int) -> "KedmdResult":
        """The result kernelized EDMD would give with rank ``k``."""
        if not 1 <= k <= self.rank:
            raise ValueError(f"k must lie in [1, {self.rank}]")
        return _assemble(self.q_hat[:, :k], self.sigma_hat[:k], self.k_hat[:k, :k],
                         self.l_hat[:k, :k], self.spec, self.requested_rank,
                         self.numerical_rank)


def _assemble(q_hat, sigma_hat, k_hat, l_hat, spec, requested, numerical) -> KedmdResult:
    evals, right, left, cond = eig_with_left(k_hat)
    quad = np.einsum("ij,ik,kj->j", left.conj(), l_hat, left).real
    residuals = np.sqrt(np.maximum(quad - np.abs(evals) ** 2, 0.0))
    defective = bool(not np.isfinite(cond) or cond > DEFECTIVE_COND)
    if defective:
        warnings.warn(f"K_hat is (near-)defective: eigenvector condition {cond:.3e}",
                      RuntimeWarning, stacklevel=3)
    return KedmdResult(
        q_hat=_ro(q_hat), sigma_hat=_ro(sigma_hat), k_hat=_ro(k_hat), l_hat=_ro(l_hat),
        eigenvalues=_ro(evals), right_vecs=_ro(right), left_vecs=_ro(left),
        residuals=_ro(residuals), spec=spec, requested_rank=requested,
        numerical_rank=numerical, defective=defective, eigvec_cond=cond,
    )


def gram_eigh(g_hat, rank: Optional[int] = None):
    """Leading eigenpairs of a PSD Gram matrix as ``(Q_hat, Sigma_hat, numerical_rank)``.

    Eigenvalues are clamped at zero; those at or below ``M * eps * sigma_1^2``
    never enter the invertible block.
    """
    m = g_hat.shape[0]
    w, q = np.linalg.eigh(hermitian_part(g_hat))
    order = np.argsort(w)[::-1]
    w = np.maximum(w[order], 0.0)
    q = q[:, order]
    if w.size == 0 or w[0] <= 0:
        raise RankError("Gram matrix is zero; nothing to decompose")
    numerical = int(np.count_nonzero(w > m * EPS * w[0]))
    r = numerical if rank is None else min(rank, numerical)
    q = q[:, :r]
    idx = np.argmax(np.abs(q), axis=0)
    signs = np.sign(q[idx, np.arange(r)])
    signs[signs == 0] = 1.0
    return q * signs, np.sqrt(w[:r]), numerical


def kedmd(pairs: SnapshotPairs, spec: KernelSpec, rank: Optional[int] = None) -> KedmdResult:
    """Kernelized EDMD of ``pairs`` with residuals for every eigen-triple.

    ``rank=None`` keeps the full numerical rank of ``G``. A request above it
    is silently reduced (see ``result.reduced``).
    """
    x, y, w = pairs.x_matrix, pairs.y_matrix, pairs.weights
    m = pairs.n_pairs
    if rank is not None and not 1 <= rank <= m:
        raise ValueError(f"rank must lie in [1, {m}], got {rank}")
    g_hat = gram(spec, x, x, w, w)
    a_hat = gram(spec, y, x, w, w)
    m_yy = gram(spec, y, y, w, w)
    q_hat, sigma_hat, numerical = gram_eigh(g_hat, rank)
    p = q_hat / sigma_hat
    k_hat = p.T @ a_hat @ p
    l_hat = hermitian_part(p.T @ m_yy @ p)
    return _assemble(q_hat, sigma_hat, k_hat, l_hat, spec, rank, numerical)


def kedmd_pseudo_point(result: KedmdResult, z: complex):
    """Minimal dual residual at ``z`` and its minimiser.

    ``tau = sqrt(lambda_min(H(z)))`` with the Hermitian form
    ``H(z) = L_hat - z K_hat^* - conj(z) K_hat + |z|^2 I``. Only the Gram form
    exists in kernel space, so the attainable accuracy near ``tau = 0`` is
    about the square root of machine precision.
    """
    k = result.k_hat
    h = result.l_hat - z * k.T - np.conj(z) * k + abs(z) ** 2 * np.eye(result.rank)
    evals, evecs = np.linalg.eigh(hermitian_part(h))
    return sqrt_clamped(evals[0]), normalize_phase(evecs[:, 0])


def eval_dictionary_at(result: KedmdResult, pairs: SnapshotPairs, spec: KernelSpec, x):
    """Evaluate the learned dictionary at state(s) ``x``.

    Returns ``k(x) Q_hat Sigma_hat^+`` where
    ``k(x)_m = sqrt(w_m) S(x, x_m) sqrt(w)`` and ``w`` is the common weight, so
    training point ``j`` maps to row ``j`` of ``Q_hat Sigma_hat``. ``x`` may be
    a single ``d``-vector or a ``d x n`` matrix (one row of output per column).
    """
    if not pairs.uniform_weights:
        raise ConfigurationError("dictionary evaluation requires uniform quadrature weights")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[:, None] if single else x
    if pts.shape[0] != pairs.dim:
        raise ValueError(f"state has dimension {pts.shape[0]}, expected {pairs.dim}")
    w = pairs.weights
    kx = gram(spec, pts, pairs.x_matrix, np.full(pts.shape[1], w[0]), w)
    out = kx @ result.coeff_map
    return out[0] if single else out


def naive_kernel_residual(result: KedmdResult, pairs: SnapshotPairs, spec: KernelSpec,
                          lam: complex, v) -> float:
    """Residual of ``(lam, v)`` in the finite dictionary ``Psi Z_hat``.

    With ``Z_hat = (sqrt(W) Psi_X)^* Q_hat Sigma_hat^+`` the weighted dictionary
    evaluated on the data is ``G P`` (for X) and ``A P`` (for Y),
    ``P = Q_hat Sigma_hat^+``. The value is ``||(A P - lam G P) v|| / ||G P v||``,
    i.e. the square root of the usual Galerkin quadratic form, taken as a norm
    to avoid cancellation. At full rank it vanishes for every right eigenpair
    of ``K_hat``.
    """
    w = pairs.weights
    p = result.coeff_map
    v = np.asarray(v, dtype=complex)
    gp = gram(spec, pairs.x_matrix, pairs.x_matrix, w, w) @ p
    ap = gram(spec, pairs.y_matrix, pairs.x_matrix, w, w) @ p
    bx = gp @ v
    den = np.linalg.norm(bx)
    if den <= 0:
        raise DegenerateError("v lies in the kernel of the dictionary; residual undefined")
    return float(np.linalg.norm(ap @ v - lam * bx) / den)
