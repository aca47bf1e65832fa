"""Exact DMD with dual least-squares residuals.

Exact DMD compresses the data onto the leading POD modes ``U`` of ``X``,

    K_tilde = U^T Y V Sigma^{-1},

and the residual of an eigenpair ``(lam, w)`` of ``K_tilde`` is measured in
the dual regression ``Y V Sigma^{-1} ~ X V Sigma^{-1} K_tilde^*``:

    res(lam, w) = ||Y V Sigma^{-1} w - lam U w|| / ||w||.

Because ``X V Sigma^{-1} = U`` has orthonormal columns this only needs the
extra ``r x r`` Gram matrix ``L_tilde = (Y V Sigma^{-1})^T (Y V Sigma^{-1})``.
Unlike the residual built on the POD dictionary (:func:`naive_projected_residual`)
it does not collapse to zero when ``M <= d``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._linalg import (DEFECTIVE_COND, EPS, eig_with_left, hermitian_part,
                      normalize_phase, quadratic_residual)
from .errors import DegenerateError, RankError
from .snapshot_io import SnapshotPairs


def _ro(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TruncatedSvd:
    """Leading ``r`` singular triplets of a data matrix, ``X ~ U diag(sigma) V^T``."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    requested_rank: Optional[int] = None
    numerical_rank: int = 0

    @property
    def rank(self) -> int:
        return self.sigma.shape[0]

    @property
    def reduced(self) -> bool:
        """True when the requested rank exceeded the numerical rank."""
        return self.requested_rank is not None and self.requested_rank > self.rank

    def head(self, k: int) -> "TruncatedSvd":
        return TruncatedSvd(_ro(self.u[:, :k]), _ro(self.sigma[:k]), _ro(self.v[:, :k]),
                            self.requested_rank, self.numerical_rank)


def default_rel_tol(shape) -> float:
    return max(shape) * EPS


def truncated_svd(x, rank: Optional[int] = None, rel_tol: Optional[float] = None) -> TruncatedSvd:
    """Rank-``r`` truncated SVD of ``x``.

    ``r`` is ``min(rank, #{sigma_i > rel_tol * sigma_1})``; ``rank=None`` keeps
    every numerically nonzero singular value. Singular vectors are sign-fixed
    (largest-magnitude entry of each ``u`` column positive) so repeated runs
    agree bit for bit.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if rank is not None and not 1 <= rank <= min(x.shape):
        raise ValueError(f"rank must lie in [1, {min(x.shape)}], got {rank}")
    if rel_tol is None:
        rel_tol = default_rel_tol(x.shape)
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    if s.size == 0 or s[0] == 0 or not np.isfinite(s[0]):
        raise RankError("data matrix is zero (or non-finite); nothing to decompose")
    numerical = int(np.count_nonzero(s > rel_tol * s[0]))
    r = numerical if rank is None else min(rank, numerical)
    u, s, v = u[:, :r], s[:r], vt[:r].T
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(r)])
    signs[signs == 0] = 1.0
    u = u * signs
    v = v * signs
    return TruncatedSvd(_ro(u), _ro(s.copy()), _ro(v), rank, numerical)


@dataclass(frozen=True)
class ExactDmdResult:
    """Output of exact DMD plus the residual ingredients.

    ``eigvec_coeffs[:, j]`` is the unit eigenvector ``w_j`` of ``k_tilde``,
    ``modes[:, j] = Y V Sigma^{-1} w_j`` and ``residuals[j]`` is its dual
    residual. ``left_coeffs`` holds matching left eigenvectors (used to
    evaluate eigenfunctions on states).
    """

    svd: TruncatedSvd
    k_tilde: np.ndarray
    l_tilde: np.ndarray
    eigenvalues: np.ndarray
    eigvec_coeffs: np.ndarray
    left_coeffs: np.ndarray
    modes: np.ndarray
    residuals: np.ndarray
    yvs: np.ndarray  # Y V Sigma^{-1}, d x r
    defective: bool = False
    eigvec_cond: float = 1.0
    _naive: tuple = field(default=(), repr=False, compare=False)
    _pencil_r: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def rank(self) -> int:
        return self.svd.rank

    def residual(self, lam, v) -> float:
        """Dual residual of an arbitrary candidate ``(lam, v)``."""
        return quadratic_residual(self.l_tilde, self.k_tilde, lam, v)

    def truncate(self, k: int) -> "ExactDmdResult":
        """The result exact DMD would give at rank ``k`` (leading POD block)."""
        if not 1 <= k <= self.rank:
            raise ValueError(f"k must lie in [1, {self.rank}]")
        naive = tuple(b[:k] for b in self._naive)
        return _assemble(self.svd.head(k), self.yvs[:, :k], naive)


def _assemble(svd: TruncatedSvd, yvs, naive) -> ExactDmdResult:
    u = svd.u
    k_tilde = u.T @ yvs
    l_tilde = hermitian_part(yvs.T @ yvs)
    evals, right, left, cond = eig_with_left(k_tilde)
    modes = yvs @ right
    # ||(YVS^-1 - z U) v|| = ||R[:, :r] v - z R[:, r:] v|| with [YVS^-1, U] = Q R
    pencil_r = np.linalg.qr(np.hstack([yvs, u]), mode="r")
    r = svd.rank
    # Same value as sqrt(w^* L w / ||w||^2 - |lam|^2), but as a norm it keeps
    # full accuracy for residuals near zero.
    residuals = np.linalg.norm(pencil_r[:, :r] @ right - (pencil_r[:, r:] @ right) * evals,
                               axis=0)
    defective = bool(not np.isfinite(cond) or cond > DEFECTIVE_COND)
    if defective:
        warnings.warn(f"K_tilde is (near-)defective: eigenvector condition {cond:.3e}",
                      RuntimeWarning, stacklevel=3)
    return ExactDmdResult(
        svd=svd,
        k_tilde=_ro(k_tilde),
        l_tilde=_ro(l_tilde),
        eigenvalues=_ro(evals),
        eigvec_coeffs=_ro(right),
        left_coeffs=_ro(left),
        modes=_ro(modes),
        residuals=_ro(residuals),
        yvs=_ro(yvs),
        defective=defective,
        eigvec_cond=cond,
        _naive=tuple(_ro(b) for b in naive),
        _pencil_r=_ro(pencil_r),
    )


def exact_dmd(pairs: SnapshotPairs, rank: Optional[int] = None,
              rel_tol: Optional[float] = None) -> ExactDmdResult:
    """Exact DMD of ``pairs`` with dual residuals for every eigenpair.

    Quadrature weights are not used: for uniform weights they cancel from
    every quantity computed here.
    """
    x, y = pairs.x_matrix, pairs.y_matrix
    svd = truncated_svd(x, rank, rel_tol)
    yvs = y @ (svd.v / svd.sigma)
    naive = (svd.u.T @ y, svd.u.T @ x)
    return _assemble(svd, yvs, naive)


def exact_pseudo_point(result: ExactDmdResult, z: complex):
    """Minimal dual residual at ``z`` and its minimiser.

    ``tau = min_{||v||=1} ||(Y V Sigma^{-1} - z U) v||``, the smallest singular
    value of a ``d x r`` pencil. The pencil is reduced once to its ``2r x 2r``
    triangular factor, so each point costs ``O(r^3)`` and never forms the
    squared Hermitian form.
    """
    r = result.rank
    rr = result._pencil_r
    pencil = rr[:, :r] - z * rr[:, r:]
    _, s, vh = np.linalg.svd(pencil)
    v = normalize_phase(vh[-1].conj())
    return float(s[-1]), v


def naive_projected_residual(result: ExactDmdResult, lam: complex, v) -> float:
    """Residual built on the POD dictionary ``psi_j(x) = U[:, j]^T x``.

    The squared value is the Galerkin quotient

        v^*[U^T Y Y^T U - lam U^T Y X^T U - conj(lam) U^T X Y^T U + |lam|^2 U^T X X^T U] v
        / v^* U^T X X^T U v,

    evaluated here as ``||(Y^T - lam X^T) U v|| / ||X^T U v||`` so that values
    near zero are resolved to working precision. When ``M <= d`` and ``r = M``
    it vanishes at every eigenpair of ``K_tilde^T``, which is why it cannot
    certify anything in that regime.
    """
    uy, ux = result._naive
    v = np.asarray(v, dtype=complex)
    bx = ux.T @ v
    den = np.linalg.norm(bx)
    if den <= 0:
        raise DegenerateError("X^T U v = 0: degenerate projection")
    return float(np.linalg.norm(uy.T @ v - lam * bx) / den)
