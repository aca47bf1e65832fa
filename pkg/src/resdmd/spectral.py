"""Pseudospectra on grids, residual filtering and Koopman mode forecasting."""
from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import DegenerateError, ShapeError
from .exact_dmd import ExactDmdResult
from .kernel_edmd import KedmdResult, eval_dictionary_at
from .kernels import KernelSpec
from .snapshot_io import SnapshotPairs

ORDERINGS = ("residual", "pca")


# --------------------------------------------------------------------------
# pseudospectra

@dataclass(frozen=True)
class PseudospectrumGrid:
    """``tau[i, j]`` is the minimal residual at ``re_axis[j] + 1j * im_axis[i]``.

    One row per imaginary-axis value, matching the CSV layout.
    """

    re_axis: np.ndarray
    im_axis: np.ndarray
    tau: np.ndarray
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.tau.shape != (len(self.im_axis), len(self.re_axis)):
            raise ShapeError("tau shape does not match the axes")

    def sublevel(self, epsilon: Optional[float] = None) -> np.ndarray:
        """Boolean mask of grid nodes with ``tau < epsilon``."""
        eps = self.epsilon if epsilon is None else epsilon
        if eps is None:
            raise ValueError("no epsilon given")
        return self.tau < eps

    def nodes(self) -> np.ndarray:
        return self.re_axis[None, :] + 1j * self.im_axis[:, None]

    def to_dict(self):
        return {
            "re_axis": [float(v) for v in self.re_axis],
            "im_axis": [float(v) for v in self.im_axis],
            "shape": list(self.tau.shape),
            "tau": [float(v) for v in self.tau.ravel()],
            "epsilon": self.epsilon,
        }


def parse_grid(text: str):
    """Parse ``"re0:re1:n_re,im0:im1:n_im"`` into two ``linspace`` axes."""
    try:
        re_part, im_part = text.split(",")
        axes = []
        for part in (re_part, im_part):
            lo, hi, n = part.split(":")
            n = int(n)
            if n < 1:
                raise ValueError
            axes.append(np.linspace(float(lo), float(hi), n))
    except ValueError:
        raise ValueError(f"grid must look like 're0:re1:n,im0:im1:n', got {text!r}") from None
    return axes[0], axes[1]


def _workers(requested: Optional[int]) -> int:
    cap = os.environ.get("RESDMD_THREADS")
    n = requested if requested is not None else (int(cap) if cap and cap.isdigit() else 1)
    if cap and cap.isdigit():
        n = min(n, int(cap))
    return max(1, n)


def grid_sweep(pseudo_point: Callable, re_axis, im_axis, epsilon: Optional[float] = None,
               workers: Optional[int] = None) -> PseudospectrumGrid:
    """Evaluate ``pseudo_point(z)[0]`` at every node of a rectangular grid.

    Nodes are independent; with ``workers > 1`` they are spread over threads
    and written back by index, so the output does not depend on scheduling.
    """
    re_axis = np.sort(np.asarray(re_axis, dtype=float))
    im_axis = np.sort(np.asarray(im_axis, dtype=float))
    if re_axis.size == 0 or im_axis.size == 0:
        raise ValueError("grid axes must be nonempty")
    nodes = (re_axis[None, :] + 1j * im_axis[:, None]).ravel()
    tau = np.empty(nodes.size)

    def work(i):
        tau[i] = pseudo_point(complex(nodes[i]))[0]

    n = _workers(workers)
    if n > 1:
        with ThreadPoolExecutor(n) as pool:
            list(pool.map(work, range(nodes.size)))
    else:
        for i in range(nodes.size):
            work(i)
    return PseudospectrumGrid(re_axis, im_axis, tau.reshape(im_axis.size, re_axis.size), epsilon)


def filter_modes(eigenvalues, residuals, epsilon: float) -> np.ndarray:
    """Indices ``j`` with ``residuals[j] <= epsilon``, in original order."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    residuals = np.asarray(residuals, dtype=float)
    if len(residuals) != len(eigenvalues):
        raise ShapeError("one residual per eigenvalue required")
    return np.flatnonzero(residuals <= epsilon)


# --------------------------------------------------------------------------
# Koopman mode decomposition

@dataclass(frozen=True)
class ModeOrder:
    indices: np.ndarray  # positions in the source result's eigen-ordering
    ordering: str


@dataclass(frozen=True)
class ForecastModel:
    """Truncated Koopman mode decomposition ``x_n ~ mean + Xi Lambda^n g(x_0)``."""

    eigenvalues: np.ndarray
    modes: np.ndarray
    eigfun_on_data: np.ndarray
    mode_order: ModeOrder
    residuals: np.ndarray
    mean: np.ndarray
    source: Union[ExactDmdResult, KedmdResult, None] = None
    ill_conditioned: bool = False

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.shape[0]


def _dmd_eigfun_coeffs(result: ExactDmdResult):
    # rows of W^{-1} are left eigenvectors biorthogonal to W
    return np.linalg.inv(result.eigvec_coeffs) @ result.svd.u.T


def fit_kmd(result: Union[ExactDmdResult, KedmdResult], pairs: SnapshotPairs, k: int,
            ordering: str = "residual", mean=None) -> ForecastModel:
    """Select ``k`` Koopman modes and fit their state-space vectors.

    ``pca`` keeps the leading ``k`` principal directions, i.e. the decomposition
    recomputed at rank ``k``; ``residual`` keeps the ``k`` eigen-triples with the
    smallest residual. The modes ``Xi`` are the least-squares fit of the
    states ``X`` against the selected eigenfunction values.
    ``pairs`` must be the (mean-subtracted) data ``result`` was fitted on;
    ``mean`` is re-added by :func:`forecast`.
    """
    if ordering not in ORDERINGS:
        raise ValueError(f"ordering must be one of {ORDERINGS}")
    if not 0 <= k <= result.rank:
        raise ValueError(f"k must lie in [0, {result.rank}]")
    x = pairs.x_matrix
    d, m = x.shape
    mean = np.zeros(d) if mean is None else np.asarray(mean, dtype=float)
    if k == 0:
        return ForecastModel(np.zeros(0, complex), np.zeros((d, 0), complex),
                             np.zeros((m, 0), complex), ModeOrder(np.zeros(0, int), ordering),
                             np.zeros(0), mean, None)
    if ordering == "pca":
        src = result.truncate(k)
        idx = np.arange(k)
    else:
        src = result
        idx = np.sort(np.argsort(result.residuals, kind="stable")[:k])
    if isinstance(src, ExactDmdResult):
        eigfun = (_dmd_eigfun_coeffs(src)[idx] @ x).T
    else:
        eigfun = (src.q_hat * src.sigma_hat) @ src.right_vecs[:, idx]
    xi_t, _, rank, sv = np.linalg.lstsq(eigfun, x.T.astype(complex), rcond=None)
    ill = bool(rank < len(idx) or (sv.size and sv[-1] <= max(eigfun.shape) * 2.2e-16 * sv[0]))
    if ill:
        warnings.warn("eigenfunction matrix is rank deficient; mode fit is ill-conditioned",
                      RuntimeWarning, stacklevel=2)
    return ForecastModel(
        eigenvalues=src.eigenvalues[idx].copy(),
        modes=xi_t.T,
        eigfun_on_data=eigfun,
        mode_order=ModeOrder(idx, ordering),
        residuals=np.asarray(src.residuals)[idx].copy(),
        mean=mean,
        source=src,
        ill_conditioned=ill,
    )


def eigfun_evaluator(model: ForecastModel, pairs: Optional[SnapshotPairs] = None,
                     spec: Optional[KernelSpec] = None) -> Callable:
    """Map a (mean-subtracted) state to the model's eigenfunction values.

    Kernel models also need the training ``pairs``; ``spec`` defaults to the
    kernel stored on the result.
    """
    src, idx = model.source, model.mode_order.indices
    if src is None:
        return lambda x: np.zeros(0, complex)
    if isinstance(src, ExactDmdResult):
        coeffs = _dmd_eigfun_coeffs(src)[idx]
        return lambda x: coeffs @ np.asarray(x, dtype=float)
    if pairs is None:
        raise ValueError("kernel eigenfunctions need the training pairs")
    spec = spec or src.spec
    vr = src.right_vecs[:, idx]
    return lambda x: eval_dictionary_at(src, pairs, spec, x) @ vr


def forecast(model: ForecastModel, initial_state, eigfun_eval: Callable, n_steps: int):
    """States ``x_1 .. x_n`` predicted from ``x_0`` (columns of a ``d x n`` array).

    ``x_n = mean + Re(sum_j xi_j lam_j^n g_j(x_0 - mean))``.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    x0 = np.asarray(initial_state, dtype=float) - model.mean
    out = np.repeat(model.mean[:, None], n_steps, axis=1)
    if model.n_modes == 0:
        return out
    g0 = np.asarray(eigfun_eval(x0), dtype=complex)
    powers = model.eigenvalues[:, None] ** np.arange(1, n_steps + 1)[None, :]
    pred = model.modes @ (powers * g0[:, None])
    return out + pred.real


def mise(forecasts: Sequence, truth: Sequence) -> float:
    """Mean over realizations of ``sum (x_hat - x)^2 / sum x^2``."""
    if len(forecasts) != len(truth) or not truth:
        raise ShapeError("need matching, nonempty lists of forecasts and truths")
    errs = []
    for f, t in zip(forecasts, truth):
        f = np.asarray(f, dtype=float)
        t = np.asarray(t, dtype=float)
        if f.shape != t.shape:
            raise ShapeError(f"forecast {f.shape} and truth {t.shape} differ in shape")
        energy = float(np.sum(t * t))
        if energy <= 0:
            raise DegenerateError("truth has zero energy")
        errs.append(float(np.sum((f - t) ** 2)) / energy)
    return float(np.mean(errs))
