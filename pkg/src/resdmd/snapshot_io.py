"""Snapshot containers, matrix file formats and data transforms.

Two on-disk formats are supported:

* CSV: comma separated, no header, one matrix row per line.
* Binary: ``b"RDMD"``, uint32 version (=1), uint64 rows, uint64 cols, then
  ``rows * cols`` float64 values in column-major order. All little-endian.
"""
from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import EmbeddingError, ParseError, ShapeError

BINARY_MAGIC = b"RDMD"
BINARY_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SnapshotPairs:
    """Paired snapshot matrices ``X``, ``Y`` (d x M) with quadrature weights.

    Column ``m`` of ``y_matrix`` is the image of column ``m`` of ``x_matrix``
    under one step of the dynamics. ``weights`` defaults to uniform ``1/M``.
    """

    x_matrix: np.ndarray
    y_matrix: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        x = np.asarray(self.x_matrix, dtype=float)
        y = np.asarray(self.y_matrix, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        if y.ndim == 1:
            y = y[None, :]
        if x.ndim != 2 or x.shape != y.shape:
            raise ShapeError(
                f"x_matrix {x.shape} and y_matrix {y.shape} must share a 2-D shape")
        if x.shape[1] < 1:
            raise ShapeError("need at least one snapshot pair")
        m = x.shape[1]
        if self.weights is None:
            w = np.full(m, 1.0 / m)
        else:
            w = np.asarray(self.weights, dtype=float).ravel()
            if w.shape != (m,):
                raise ShapeError(f"expected {m} weights, got {w.shape[0]}")
            if not np.all(w > 0):
                raise ShapeError("quadrature weights must be strictly positive")
        object.__setattr__(self, "x_matrix", _frozen(x))
        object.__setattr__(self, "y_matrix", _frozen(y))
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def dim(self) -> int:
        return self.x_matrix.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.x_matrix.shape[1]

    @property
    def uniform_weights(self) -> bool:
        w = self.weights
        return bool(np.all(np.abs(w - w[0]) <= 1e-12 * w[0]))

    @classmethod
    def from_trajectory(cls, data) -> "SnapshotPairs":
        """Consecutive-column pairs of a single d x T trajectory."""
        data = np.asarray(data, dtype=float)
        if data.ndim == 1:
            data = data[None, :]
        if data.shape[1] < 2:
            raise ShapeError("a trajectory needs at least two snapshots")
        return cls(data[:, :-1], data[:, 1:])


@dataclass(frozen=True)
class TrajectorySet:
    """Ordered realizations, each a ``T_i x p`` array (rows are time steps)."""

    realizations: tuple
    labels: tuple = field(default=())

    def __post_init__(self):
        reals = []
        for i, r in enumerate(self.realizations):
            r = np.asarray(r, dtype=float)
            if r.ndim == 1:
                r = r[:, None]
            if r.ndim != 2:
                raise ShapeError(f"realization {i} must be 1-D or 2-D")
            if r.shape[0] < 2:
                raise ShapeError(f"realization {i} has fewer than 2 time steps")
            reals.append(_frozen(r))
        channels = {r.shape[1] for r in reals}
        if len(channels) > 1:
            raise ShapeError(f"realizations disagree on channel count: {sorted(channels)}")
        labels = tuple(self.labels) if self.labels else tuple(range(len(reals)))
        if len(labels) != len(reals):
            raise ShapeError("one label per realization required")
        object.__setattr__(self, "realizations", tuple(reals))
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.realizations)

    @property
    def n_channels(self) -> int:
        return self.realizations[0].shape[1] if self.realizations else 0

    @classmethod
    def from_columns(cls, matrix) -> "TrajectorySet":
        """Each column of a ``T x R`` matrix is one scalar realization."""
        matrix = np.asarray(matrix, dtype=float)
        return cls(tuple(matrix[:, [j]] for j in range(matrix.shape[1])))


# --------------------------------------------------------------------------
# file formats

def _infer_format(path: Path) -> str:
    if path.suffix.lower() in (".csv", ".txt"):
        return "csv"
    with open(path, "rb") as fh:
        head = fh.read(4)
    return "binary" if head == BINARY_MAGIC else "csv"


def _parse_csv(text: str) -> np.ndarray:
    rows = []
    width = None
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        values = []
        for col, cell in enumerate(row, start=1):
            try:
                values.append(float(cell))
            except ValueError:
                raise ParseError(
                    f"row {lineno}, column {col}: cannot parse {cell.strip()!r} as a number"
                ) from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ShapeError(f"row {lineno} has {len(values)} columns, expected {width}")
        rows.append(values)
    if not rows:
        raise ParseError("row 1, column 1: empty matrix file")
    return np.array(rows, dtype=float)


def _parse_binary(blob: bytes) -> np.ndarray:
    if len(blob) < _HEADER.size:
        raise ParseError("binary header truncated")
    magic, version, rows, cols = _HEADER.unpack_from(blob)
    if magic != BINARY_MAGIC:
        raise ParseError(f"bad magic {magic!r}")
    if version != BINARY_VERSION:
        raise ParseError(f"unsupported binary version {version}")
    expected = rows * cols * 8
    payload = blob[_HEADER.size:]
    if len(payload) != expected:
        raise ParseError(
            f"payload is {len(payload)} bytes, header declares {rows}x{cols} ({expected} bytes)")
    flat = np.frombuffer(payload, dtype="<f8")
    return flat.reshape((rows, cols), order="F").astype(float)


def load_matrix(path, format: Optional[str] = None, transpose: bool = False) -> np.ndarray:
    """Read a real matrix from ``path``.

    ``format`` is ``"csv"`` or ``"binary"``; when omitted it is inferred from
    the extension and, failing that, the magic bytes.
    """
    path = Path(path)
    fmt = format or _infer_format(path)
    if fmt == "csv":
        a = _parse_csv(path.read_text())
    elif fmt == "binary":
        a = _parse_binary(path.read_bytes())
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")
    return a.T.copy() if transpose else a


def format_csv(a) -> str:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    return "".join(",".join(format(v, ".17g") for v in row) + "\n" for row in a)


def save_matrix(path, a, format: Optional[str] = None) -> None:
    """Write ``a`` as CSV (17 significant digits) or the binary format."""
    path = Path(path)
    a = np.atleast_2d(np.asarray(a, dtype=float))
    fmt = format or ("csv" if path.suffix.lower() in (".csv", ".txt") else "binary")
    if fmt == "csv":
        path.write_text(format_csv(a))
    elif fmt == "binary":
        rows, cols = a.shape
        header = _HEADER.pack(BINARY_MAGIC, BINARY_VERSION, rows, cols)
        path.write_bytes(header + np.asarray(a, dtype="<f8").tobytes(order="F"))
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")


# --------------------------------------------------------------------------
# transforms

def delay_embed(traj: TrajectorySet, q: int) -> SnapshotPairs:
    """Time-delay embedding with a forward window of length ``q``.

    For each realization ``s`` and ``n = 0 .. T-q-1`` the state is
    ``(s[n], ..., s[n+q-1])`` and its image ``(s[n+1], ..., s[n+q])``.
    Multi-channel data is stacked channel by channel, so ``d = p * q`` and
    entry ``c*q + lag`` holds channel ``c`` at the given lag. Pairs from all
    realizations are concatenated in order; weights are uniform.
    """
    if q < 1:
        raise ValueError("delay q must be >= 1")
    if len(traj) == 0:
        raise EmbeddingError("no realizations to embed")
    xs, ys = [], []
    for label, s in zip(traj.labels, traj.realizations):
        t, p = s.shape
        if t <= q:
            raise EmbeddingError(
                f"realization {label} has {t} steps, needs more than q={q}")
        # windows[n, lag, c] = s[n + lag, c], n = 0 .. t-q
        windows = np.lib.stride_tricks.sliding_window_view(s, q, axis=0)
        # sliding_window_view puts the window axis last: (t-q+1, p, q)
        stacked = windows.reshape(t - q + 1, p * q).T
        xs.append(stacked[:, :-1])
        ys.append(stacked[:, 1:])
    return SnapshotPairs(np.hstack(xs), np.hstack(ys))


def mean_subtract(pairs: SnapshotPairs):
    """Subtract the column mean of X from both X and Y.

    Returns ``(centred_pairs, mean)``; add ``mean[:, None]`` back to undo.
    """
    mean = pairs.x_matrix.mean(axis=1)
    centred = SnapshotPairs(pairs.x_matrix - mean[:, None],
                            pairs.y_matrix - mean[:, None],
                            pairs.weights)
    return centred, mean


def split_realizations(traj: TrajectorySet, n_test: int, seed: int):
    """Seeded random partition into ``(train, test)`` trajectory sets.

    Both halves keep the original relative order and labels.
    """
    n = len(traj)
    if not 0 <= n_test < n:
        raise ValueError(f"n_test must lie in [0, {n}), got {n_test}")
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = set(int(i) for i in perm[:n_test])

    def pick(keep):
        idx = [i for i in range(n) if (i in test_idx) == keep]
        return TrajectorySet(tuple(traj.realizations[i] for i in idx),
                             tuple(traj.labels[i] for i in idx))

    return pick(False), pick(True)
