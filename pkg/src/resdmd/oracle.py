"""Explicit-dictionary EDMD, kept deliberately naive.

This is the brute-force reference that the DMD and kernel paths are checked
against: it evaluates every observable on every snapshot and forms the
``N x N`` matrices directly. Only meant for small ``N``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb, factorial, sqrt
from typing import Callable, Sequence

import numpy as np

from ._linalg import EPS, sqrt_clamped
from .errors import DegenerateError
from .snapshot_io import SnapshotPairs

MAX_FEATURES = 10_000


@dataclass(frozen=True)
class ExplicitDictionary:
    observables: tuple
    labels: tuple

    def __post_init__(self):
        obs = tuple(self.observables)
        labels = tuple(self.labels) if self.labels else tuple(f"psi_{j}" for j in range(len(obs)))
        if not obs:
            raise ValueError("dictionary needs at least one observable")
        if len(labels) != len(obs):
            raise ValueError("one label per observable required")
        object.__setattr__(self, "observables", obs)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.observables)

    def evaluate(self, points) -> np.ndarray:
        """``Psi[m, j] = psi_j(points[:, m])`` for ``d x M`` points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rows = [[f(pts[:, m]) for f in self.observables] for m in range(pts.shape[1])]
        return np.array(rows)


def dictionary(funcs: Sequence[Callable], labels: Sequence[str] = ()) -> ExplicitDictionary:
    return ExplicitDictionary(tuple(funcs), tuple(labels))


@dataclass(frozen=True)
class ExplicitEdmd:
    k: np.ndarray
    g: np.ndarray
    a: np.ndarray
    l: np.ndarray
    full_rank: bool

    def __iter__(self):
        return iter((self.k, self.g, self.a, self.l))


def explicit_edmd(pairs: SnapshotPairs, dic: ExplicitDictionary) -> ExplicitEdmd:
    """EDMD matrices ``K = G^+ A`` with ``G = Psi_X^* W Psi_X``,
    ``A = Psi_X^* W Psi_Y`` and ``L = Psi_Y^* W Psi_Y``.

    ``K`` is computed as ``(W^1/2 Psi_X)^+ W^1/2 Psi_Y`` with the same relative
    singular-value cut as :func:`resdmd.exact_dmd.truncated_svd`.
    """
    sw = np.sqrt(pairs.weights)[:, None]
    px = dic.evaluate(pairs.x_matrix)
    py = dic.evaluate(pairs.y_matrix)
    wx, wy = sw * px, sw * py
    g = wx.conj().T @ wx
    a = wx.conj().T @ wy
    l = wy.conj().T @ wy
    rcond = max(wx.shape) * EPS
    k = np.linalg.pinv(wx, rcond=rcond) @ wy
    s = np.linalg.svd(wx, compute_uv=False)
    full_rank = bool(s.size == wx.shape[1] and s[-1] > rcond * s[0])
    return ExplicitEdmd(k, g, a, l, full_rank)


def explicit_residual(g, a, l, lam: complex, gvec) -> float:
    """``sqrt(g^*[L - lam A^* - conj(lam) A + |lam|^2 G] g / g^* G g)``."""
    gvec = np.asarray(gvec, dtype=complex)
    den = np.vdot(gvec, g @ gvec).real
    if den <= 0:
        raise DegenerateError("g^* G g <= 0")
    num = (np.vdot(gvec, l @ gvec)
           - lam * np.vdot(gvec, a.conj().T @ gvec)
           - np.conj(lam) * np.vdot(gvec, a @ gvec)
           + abs(lam) ** 2 * den)
    return sqrt_clamped(num / den)


def _exponents(d: int, alpha: int):
    """Multi-indices with total degree <= alpha, graded then lexicographic."""
    for deg in range(alpha + 1):
        # combinations_with_replacement yields variable tuples in lex order
        for combo in itertools.combinations_with_replacement(range(d), deg):
            beta = [0] * d
            for i in combo:
                beta[i] += 1
            yield tuple(beta)


def poly_feature_map(c: float, alpha: int, d: int) -> ExplicitDictionary:
    """Explicit features of the polynomial kernel ``(<x, x'>/c^2 + 1)^alpha``.

    One monomial ``x^beta / c^|beta|`` per multi-index ``|beta| <= alpha``,
    scaled by the square root of its multinomial coefficient
    ``alpha! / ((alpha - |beta|)! beta_1! ... beta_d!)``.
    """
    if alpha < 1 or d < 1:
        raise ValueError("alpha and d must be >= 1")
    n = comb(d + alpha, alpha)
    if n > MAX_FEATURES:
        raise ValueError(f"feature map would have {n} terms (cap {MAX_FEATURES})")
    funcs, labels = [], []
    for beta in _exponents(d, alpha):
        deg = sum(beta)
        coef = factorial(alpha) / factorial(alpha - deg)
        for b in beta:
            coef /= factorial(b)
        scale = sqrt(coef) / c**deg
        exps = np.array(beta)
        funcs.append(lambda x, e=exps, s=scale: s * float(np.prod(np.asarray(x, float) ** e)))
        labels.append("1" if deg == 0 else "*".join(
            f"x{i}" + (f"^{b}" if b > 1 else "") for i, b in enumerate(beta) if b))
    return ExplicitDictionary(tuple(funcs), tuple(labels))


def pod_dictionary(u) -> ExplicitDictionary:
    """Linear observables ``psi_j(x) = u[:, j]^T x``."""
    u = np.asarray(u, dtype=float)
    funcs = [lambda x, col=u[:, j].copy(): float(col @ np.asarray(x, float))
             for j in range(u.shape[1])]
    return ExplicitDictionary(tuple(funcs), tuple(f"pod_{j}" for j in range(u.shape[1])))
