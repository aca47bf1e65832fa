"""Kernel functions and weighted Gram assembly.

Points are stored column-wise (``d x m``), like the snapshot matrices.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DegenerateError

KINDS = ("gaussian", "laplacian", "lorentzian", "polynomial")
_ALIASES = {"poly": "polynomial", "gauss": "gaussian", "rbf": "gaussian"}


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    scale: float = 1.0
    degree: Optional[int] = None

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ValueError(f"unknown kernel {self.kind!r}; choose from {KINDS}")
        object.__setattr__(self, "kind", kind)
        if not (self.scale > 0 and np.isfinite(self.scale)):
            raise ValueError(f"kernel scale must be positive, got {self.scale}")
        object.__setattr__(self, "scale", float(self.scale))
        if kind == "polynomial":
            deg = 1 if self.degree is None else self.degree
            if int(deg) != deg or deg < 1:
                raise ValueError(f"polynomial degree must be a positive integer, got {deg}")
            object.__setattr__(self, "degree", int(deg))
        elif self.degree is not None:
            raise ValueError(f"degree only applies to the polynomial kernel, not {kind}")

    def to_dict(self):
        return {"kind": self.kind, "scale": self.scale, "degree": self.degree}


def _apply(spec: KernelSpec, a, b):
    """Kernel matrix ``S[i, j] = S(a_i, b_j)`` for row-wise point arrays."""
    c = spec.scale
    if spec.kind == "polynomial":
        return (a @ b.T / c**2 + 1.0) ** spec.degree
    if spec.kind == "laplacian":
        return np.exp(-cdist(a, b, "euclidean") / c)
    sq = cdist(a, b, "sqeuclidean") / c**2
    if spec.kind == "gaussian":
        return np.exp(-sq)
    return 1.0 / (1.0 + sq)


def kernel_eval(spec: KernelSpec, x, xp) -> float:
    x = np.asarray(x, dtype=float).ravel()
    xp = np.asarray(xp, dtype=float).ravel()
    if x.shape != xp.shape:
        raise ValueError(f"points differ in dimension: {x.shape[0]} vs {xp.shape[0]}")
    return float(_apply(spec, x[None, :], xp[None, :])[0, 0])


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("RESDMD_THREADS", "1")))
    except ValueError:
        return 1


def gram(spec: KernelSpec, a_points, b_points, weights_a=None, weights_b=None,
         block: int = 2048):
    """Weighted Gram matrix ``sqrt(w_a[j]) S(a_j, b_k) sqrt(w_b[k])``.

    ``a_points`` is ``d x m`` and ``b_points`` is ``d x n``. Missing weights
    mean 1. Rows are filled in independent blocks (optionally on
    ``RESDMD_THREADS`` threads); the result does not depend on the worker count.
    """
    a = np.asarray(a_points, dtype=float)
    b = np.asarray(b_points, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"point dimensions differ: {a.shape[0]} vs {b.shape[0]}")
    at, bt = a.T, b.T
    m, n = at.shape[0], bt.shape[0]
    out = np.empty((m, n))
    starts = range(0, m, block)

    def fill(s):
        out[s:s + block] = _apply(spec, at[s:s + block], bt)

    workers = min(_threads(), len(starts))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(fill, starts))
    else:
        for s in starts:
            fill(s)
    if weights_a is not None:
        out *= np.sqrt(np.asarray(weights_a, dtype=float))[:, None]
    if weights_b is not None:
        out *= np.sqrt(np.asarray(weights_b, dtype=float))[None, :]
    return out


def default_scale(x) -> float:
    """Average l2 norm of the mean-subtracted columns of ``x``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    dev = x - x.mean(axis=1, keepdims=True)
    c = float(np.linalg.norm(dev, axis=0).mean())
    ref = float(np.abs(x).max()) if x.size else 0.0
    if not c > 64 * np.finfo(float).eps * max(ref, 1e-300):
        raise DegenerateError("all snapshots coincide; kernel scale would be zero")
    return c
