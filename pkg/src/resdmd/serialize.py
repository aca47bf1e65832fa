"""Deterministic JSON encoding of results.

Field names here are part of the CLI contract (see README); downstream
plotting scripts rely on them.

* complex scalars and vectors: ``[re, im]`` pairs
* matrices: ``{"shape": [rows, cols], "data": [...]}`` in row-major order,
  entries being ``[re, im]`` pairs when the matrix is complex
"""
from __future__ import annotations

import json
import math

import numpy as np


def _num(v):
    v = float(v)
    return v if math.isfinite(v) else None


def complex_list(values):
    return [[_num(z.real), _num(z.imag)] for z in np.asarray(values, dtype=complex).ravel()]


def real_list(values):
    return [_num(v) for v in np.asarray(values, dtype=float).ravel()]


def matrix(a):
    a = np.atleast_2d(np.asarray(a))
    data = complex_list(a) if np.iscomplexobj(a) else real_list(a)
    return {"shape": list(a.shape), "data": data}


def exact_dmd_to_dict(result, indices=None):
    idx = np.arange(result.rank) if indices is None else np.asarray(indices, dtype=int)
    return {
        "method": "dmd",
        "rank": result.rank,
        "requested_rank": result.svd.requested_rank,
        "rank_reduced": result.svd.reduced,
        "singular_values": real_list(result.svd.sigma),
        "indices": [int(i) for i in idx],
        "eigenvalues": complex_list(result.eigenvalues[idx]),
        "residuals": real_list(result.residuals[idx]),
        "eigvec_coeffs": matrix(result.eigvec_coeffs[:, idx]),
        "modes": matrix(result.modes[:, idx]),
        "k_tilde": matrix(result.k_tilde),
        "l_tilde": matrix(result.l_tilde),
        "defective": result.defective,
    }


def kedmd_to_dict(result, indices=None):
    idx = np.arange(result.rank) if indices is None else np.asarray(indices, dtype=int)
    return {
        "method": "kedmd",
        "kernel": result.spec.to_dict() if result.spec is not None else None,
        "rank": result.rank,
        "requested_rank": result.requested_rank,
        "rank_reduced": result.reduced,
        "sigma_hat": real_list(result.sigma_hat),
        "indices": [int(i) for i in idx],
        "eigenvalues": complex_list(result.eigenvalues[idx]),
        "residuals": real_list(result.residuals[idx]),
        "left_vecs": matrix(result.left_vecs[:, idx]),
        "right_vecs": matrix(result.right_vecs[:, idx]),
        "k_hat": matrix(result.k_hat),
        "l_hat": matrix(result.l_hat),
        "defective": result.defective,
    }


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, allow_nan=False) + "\n"
