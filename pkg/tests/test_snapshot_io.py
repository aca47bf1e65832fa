import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from resdmd.errors import EmbeddingError, ParseError, ShapeError
from resdmd.snapshot_io import (SnapshotPairs, TrajectorySet, delay_embed, load_matrix,
                                mean_subtract, save_matrix, split_realizations)


def write(tmp_path, name, content):
    p = tmp_path / name
    if isinstance(content, bytes):
        p.write_bytes(content)
    else:
        p.write_text(content)
    return p


# ---- load_matrix ----------------------------------------------------------

def test_csv_basic(tmp_path):
    a = load_matrix(write(tmp_path, "a.csv", "1,2\n3,4"))
    np.testing.assert_array_equal(a, [[1, 2], [3, 4]])


def test_binary_column_major(tmp_path):
    blob = b"RDMD" + struct.pack("<IQQ", 1, 2, 1) + struct.pack("<2d", 5.0, 7.0)
    a = load_matrix(write(tmp_path, "a.bin", blob))
    np.testing.assert_array_equal(a, [[5], [7]])


def test_binary_column_major_2x2(tmp_path):
    blob = b"RDMD" + struct.pack("<IQQ", 1, 2, 2) + struct.pack("<4d", 1, 3, 2, 4)
    np.testing.assert_array_equal(load_matrix(write(tmp_path, "m", blob)), [[1, 2], [3, 4]])


def test_csv_ragged_rows(tmp_path):
    with pytest.raises(ShapeError, match="row 2"):
        load_matrix(write(tmp_path, "a.csv", "1,2\n3"))


def test_csv_bad_token_reports_location(tmp_path):
    with pytest.raises(ParseError, match="row 2, column 2"):
        load_matrix(write(tmp_path, "a.csv", "1,2\n3,abc\n"))


def test_csv_empty(tmp_path):
    with pytest.raises(ParseError):
        load_matrix(write(tmp_path, "a.csv", "\n\n"))


def test_binary_truncated_payload(tmp_path):
    blob = b"RDMD" + struct.pack("<IQQ", 1, 3, 3) + struct.pack("<2d", 1, 2)
    with pytest.raises(ParseError, match="payload"):
        load_matrix(write(tmp_path, "a.bin", blob), format="binary")


def test_binary_bad_version(tmp_path):
    blob = b"RDMD" + struct.pack("<IQQ", 9, 1, 1) + struct.pack("<d", 1)
    with pytest.raises(ParseError, match="version"):
        load_matrix(write(tmp_path, "a.bin", blob))


def test_transpose_flag(tmp_path):
    a = load_matrix(write(tmp_path, "a.csv", "1,2,3\n4,5,6\n"), transpose=True)
    assert a.shape == (3, 2)
    np.testing.assert_array_equal(a[:, 0], [1, 2, 3])


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_matrix(tmp_path / "nope.csv")


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=finite))
def test_binary_round_trip_exact(tmp_path_factory, a):
    p = tmp_path_factory.mktemp("rt") / "a.bin"
    save_matrix(p, a)
    np.testing.assert_array_equal(load_matrix(p), a)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.floats(-1e300, 1e300, allow_nan=False)))
def test_csv_round_trip(tmp_path_factory, a):
    p = tmp_path_factory.mktemp("rt") / "a.csv"
    save_matrix(p, a)
    b = load_matrix(p)
    assert b.shape == a.shape
    assert np.all(np.abs(b - a) <= 1e-15 * np.abs(a))


# ---- SnapshotPairs / TrajectorySet ------------------------------------------

def test_pairs_default_weights():
    p = SnapshotPairs(np.ones((2, 4)), np.ones((2, 4)))
    np.testing.assert_allclose(p.weights, 0.25)
    assert p.uniform_weights and p.dim == 2 and p.n_pairs == 4


def test_pairs_shape_mismatch():
    with pytest.raises(ShapeError):
        SnapshotPairs(np.ones((2, 4)), np.ones((2, 3)))


def test_pairs_bad_weights():
    with pytest.raises(ShapeError):
        SnapshotPairs(np.ones((1, 2)), np.ones((1, 2)), weights=[1.0, 0.0])


def test_pairs_are_read_only():
    p = SnapshotPairs(np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        p.x_matrix[0, 0] = 1.0


def test_from_trajectory():
    p = SnapshotPairs.from_trajectory([[1, 2, 3]])
    np.testing.assert_array_equal(p.x_matrix, [[1, 2]])
    np.testing.assert_array_equal(p.y_matrix, [[2, 3]])


def test_trajectory_channel_mismatch():
    with pytest.raises(ShapeError):
        TrajectorySet((np.ones((5, 2)), np.ones((5, 3))))


# ---- delay_embed -------------------------------------------------------------

def test_delay_embed_unrolled():
    p = delay_embed(TrajectorySet(([1.0, 2, 3, 4],)), 2)
    np.testing.assert_array_equal(p.x_matrix, [[1, 2], [2, 3]])
    np.testing.assert_array_equal(p.y_matrix, [[2, 3], [3, 4]])


def test_delay_one_is_consecutive_pairs(rng):
    s = rng.standard_normal((7, 3))
    p = delay_embed(TrajectorySet((s,)), 1)
    np.testing.assert_array_equal(p.x_matrix, s[:-1].T)
    np.testing.assert_array_equal(p.y_matrix, s[1:].T)


def test_delay_embed_snapshot_count_sixty_realizations(rng):
    traj = TrajectorySet(tuple(rng.standard_normal(123) for _ in range(60)))
    p = delay_embed(traj, 10)
    assert p.n_pairs == 6780
    assert p.dim == 10
    np.testing.assert_allclose(p.weights, 1 / 6780)


def test_delay_embed_channel_major():
    s = np.column_stack([np.arange(5.0), 100 + np.arange(5.0)])
    p = delay_embed(TrajectorySet((s,)), 3)
    np.testing.assert_array_equal(p.x_matrix[:, 0], [0, 1, 2, 100, 101, 102])


def test_delay_embed_too_short_names_realization():
    traj = TrajectorySet((np.arange(6.0), np.arange(3.0)), labels=("a", "short"))
    with pytest.raises(EmbeddingError, match="short"):
        delay_embed(traj, 3)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(2, 15), min_size=1, max_size=5), st.integers(1, 4),
       st.integers(1, 3))
def test_delay_embed_count_and_shift(lengths, q, p):
    lengths = [t + q for t in lengths]
    rng = np.random.default_rng(sum(lengths))
    traj = TrajectorySet(tuple(rng.standard_normal((t, p)) for t in lengths))
    pairs = delay_embed(traj, q)
    assert pairs.n_pairs == sum(t - q for t in lengths)
    start = 0
    for t in lengths:
        block_x = pairs.x_matrix[:, start:start + t - q]
        block_y = pairs.y_matrix[:, start:start + t - q]
        np.testing.assert_array_equal(block_y[:, :-1], block_x[:, 1:])
        start += t - q


# ---- mean_subtract / split ---------------------------------------------------

def test_mean_subtract_zero_mean():
    p, mean = mean_subtract(SnapshotPairs([[1.0, -1.0], [0, 0]], [[1.0, 1.0], [0, 0]]))
    np.testing.assert_array_equal(mean, [0, 0])
    np.testing.assert_array_equal(p.x_matrix, [[1, -1], [0, 0]])


def test_mean_subtract_arithmetic():
    p, mean = mean_subtract(SnapshotPairs([[2.0, 4.0]], [[3.0, 5.0]]))
    np.testing.assert_array_equal(mean, [3])
    np.testing.assert_array_equal(p.x_matrix, [[-1, 1]])
    np.testing.assert_array_equal(p.y_matrix, [[0, 2]])


def test_mean_subtract_inverse(rng):
    x, y = rng.standard_normal((2, 4, 9)) * 1e3
    p, mean = mean_subtract(SnapshotPairs(x, y))
    np.testing.assert_allclose(p.x_matrix + mean[:, None], x, rtol=0, atol=1e-12)
    np.testing.assert_allclose(p.y_matrix + mean[:, None], y, rtol=0, atol=1e-12)


def test_split_sizes():
    traj = TrajectorySet(tuple(np.arange(5.0) + i for i in range(65)))
    train, test = split_realizations(traj, 5, seed=1)
    assert (len(train), len(test)) == (60, 5)
    assert sorted(train.labels + test.labels) == list(range(65))
    assert not set(train.labels) & set(test.labels)


def test_split_zero_and_determinism():
    traj = TrajectorySet(tuple(np.arange(4.0) * i for i in range(10)))
    train, test = split_realizations(traj, 0, seed=3)
    assert len(test) == 0 and len(train) == 10
    a = split_realizations(traj, 4, seed=7)
    b = split_realizations(traj, 4, seed=7)
    assert a[1].labels == b[1].labels


@pytest.mark.parametrize("n_test", [-1, 10, 11])
def test_split_out_of_range(n_test):
    traj = TrajectorySet(tuple(np.arange(4.0) for _ in range(10)))
    with pytest.raises(ValueError):
        split_realizations(traj, n_test, seed=0)
