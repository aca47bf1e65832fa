"""Oracle equivalence suite behind ``resdmd selftest``.

Each check pits the main code path against an independent computation on a
small seeded instance and reports the worst discrepancy.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from .exact_dmd import exact_dmd, exact_pseudo_point, naive_projected_residual
from .kernel_edmd import kedmd, naive_kernel_residual
from .kernels import KernelSpec, gram, kernel_eval
from .oracle import explicit_edmd, explicit_residual, pod_dictionary, poly_feature_map, dictionary
from .snapshot_io import SnapshotPairs


@dataclass
class CheckResult:
    name: str
    error: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.error) and self.error <= self.tol)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: max error {self.error:.3e} (tol {self.tol:.0e})"


def match_eigenvalues(a, b):
    """Largest distance in a greedy nearest-neighbour pairing of two spectra."""
    a = list(np.asarray(a, dtype=complex))
    b = list(np.asarray(b, dtype=complex))
    if len(a) != len(b):
        return np.inf
    worst = 0.0
    for z in sorted(a, key=lambda z: (-abs(z), -z.real, -z.imag)):
        k = int(np.argmin([abs(z - w) for w in b]))
        worst = max(worst, abs(z - b.pop(k)))
    return worst


def _nonzero(vals, tol=1e-9):
    vals = np.asarray(vals)
    return vals[np.abs(vals) > tol]


def check_dmd_duality(seed=0):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, 7, 5))
    pairs = SnapshotPairs(x, y)
    res = exact_dmd(pairs, 5)
    k = explicit_edmd(pairs, pod_dictionary(res.svd.u)).k
    return float(np.abs(k - res.k_tilde.T).max())


def check_poly_features(seed=1):
    rng = np.random.default_rng(seed)
    spec = KernelSpec("polynomial", 1.0, 2)
    dic = poly_feature_map(1.0, 2, 2)
    err = 0.0
    for _ in range(20):
        x, xp = rng.standard_normal((2, 2))
        phi = dic.evaluate(np.column_stack([x, xp]))
        err = max(err, abs(phi[0] @ phi[1] - kernel_eval(spec, x, xp)))
    return err


def check_kernel_trick(seed=2):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, (2, 20))
    y = np.vstack([0.9 * x[0] + 0.2 * x[1] ** 2, 0.7 * x[1] - 0.3 * x[0] * x[1]])
    pairs = SnapshotPairs(x, y)
    res = kedmd(pairs, KernelSpec("polynomial", 1.0, 2))
    k = explicit_edmd(pairs, poly_feature_map(1.0, 2, 2)).k
    return match_eigenvalues(_nonzero(res.eigenvalues), _nonzero(np.linalg.eigvals(k)))


def check_naive_dmd_vanishes(seed=3):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, 10, 6))
    res = exact_dmd(SnapshotPairs(x, y), 6)
    lam, vecs = np.linalg.eig(res.k_tilde.T)
    return max(naive_projected_residual(res, l, vecs[:, j]) for j, l in enumerate(lam))


def check_naive_kernel_vanishes(seed=4):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((3, 20))
    y = 0.8 * x + 0.3 * rng.standard_normal((3, 20))
    pairs = SnapshotPairs(x, y)
    spec = KernelSpec("gaussian", 1.0)
    res = kedmd(pairs, spec, 20)
    return max(naive_kernel_residual(res, pairs, spec, l, res.right_vecs[:, j])
               for j, l in enumerate(res.eigenvalues))


def check_dmd_residual_forms(seed=5):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, 6, 40))
    pairs = SnapshotPairs(x, y)
    res = exact_dmd(pairs, 4)
    xvs = x @ (res.svd.v / res.svd.sigma)
    err = 0.0
    for _ in range(50):
        lam = complex(*rng.standard_normal(2))
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        direct = np.linalg.norm(res.yvs @ v - lam * xvs @ v) / np.linalg.norm(v)
        err = max(err, abs(res.residual(lam, v) - direct))
    return err


def check_kernel_residual_forms(seed=6):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((3, 25))
    y = np.tanh(x) + 0.1 * rng.standard_normal((3, 25))
    pairs = SnapshotPairs(x, y)
    spec = KernelSpec("laplacian", 2.0)
    res = kedmd(pairs, spec, 8)
    w = pairs.weights
    g, a, m = gram(spec, x, x, w, w), gram(spec, y, x, w, w), gram(spec, y, y, w, w)
    p = res.coeff_map
    err = 0.0
    for _ in range(50):
        lam = complex(*rng.standard_normal(2))
        v = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        pv = p @ v
        form = (np.vdot(pv, m @ pv) - lam * np.vdot(pv, a.T @ pv)
                - np.conj(lam) * np.vdot(pv, a @ pv) + abs(lam) ** 2 * np.vdot(pv, g @ pv))
        direct = np.sqrt(max(form.real, 0.0)) / np.linalg.norm(v)
        err = max(err, abs(res.residual(lam, v) - direct))
    return err


def check_orthogonal_pseudospectrum(seed=7):
    rng = np.random.default_rng(seed)
    a, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    x = rng.standard_normal((6, 60))
    res = exact_dmd(SnapshotPairs(x, a @ x), 6)
    lam = np.linalg.eigvals(a)
    err = 0.0
    for re in np.linspace(-1.5, 1.5, 11):
        for im in np.linspace(-1.5, 1.5, 11):
            z = complex(re, im)
            tau = exact_pseudo_point(res, z)[0]
            err = max(err, abs(tau - np.min(np.linalg.svd(a - z * np.eye(6), compute_uv=False))))
    return err


def _fourier_rotation(alpha, m):
    theta = 2 * np.pi * np.arange(m) / m
    pairs = SnapshotPairs(theta[None, :], theta[None, :] + alpha)
    ks = np.arange(-2, 3)
    dic = dictionary([lambda x, k=k: np.exp(1j * k * x[0]) for k in ks])
    return ks, explicit_edmd(pairs, dic)


def check_fourier_rotation(alpha=0.7, m=16):
    ks, res = _fourier_rotation(alpha, m)
    return float(np.abs(res.k - np.diag(np.exp(1j * alpha * ks))).max())


def check_fourier_residual(alpha=0.7, m=16):
    # Gram-form residual: accurate to about sqrt(eps) near zero
    ks, (_, g, a, l) = _fourier_rotation(alpha, m)
    eye = np.eye(len(ks))
    return max(explicit_residual(g, a, l, np.exp(1j * k * alpha), eye[j])
               for j, k in enumerate(ks))


CHECKS: List[tuple] = [
    ("dmd_edmd_duality", check_dmd_duality, 1e-10),
    ("poly_feature_map_inner_product", check_poly_features, 1e-12),
    ("kernel_trick_eigenvalues", check_kernel_trick, 1e-6),
    ("naive_dmd_residual_vanishes", check_naive_dmd_vanishes, 1e-10),
    ("naive_kernel_residual_vanishes", check_naive_kernel_vanishes, 1e-8),
    ("dmd_residual_gram_vs_norm", check_dmd_residual_forms, 1e-8),
    ("kernel_residual_reduced_vs_gram", check_kernel_residual_forms, 1e-7),
    ("orthogonal_pseudospectrum", check_orthogonal_pseudospectrum, 1e-8),
    ("fourier_rotation_edmd", check_fourier_rotation, 1e-10),
    ("fourier_eigenfunction_residual", check_fourier_residual, 1e-7),
]


def run_selftest(emit: Callable[[str], None] = print) -> bool:
    ok = True
    for name, fn, tol in CHECKS:
        result = CheckResult(name, float(fn()), tol)
        emit(result.line())
        ok &= result.passed
    return ok
