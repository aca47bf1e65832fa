import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_orthogonal(rng, d):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def spurious_instance(rng, m=400):
    """Stable 3-D linear system in channels 0-2 plus an appended junk direction.

    Channel 3 of X carries large noise that reappears in channel 4 of Y, a
    direction X never visits. Exact DMD at rank 4 then contains one spurious
    mode (eigenvalue near 0) whose image leaves the POD subspace. Returns ``(A, pairs)`` where ``A``
    acts on channels 0-2.
    """
    q = random_orthogonal(rng, 3)
    t = np.pi / 6
    block = np.array([[0.95, 0, 0], [0, 0.8 * np.cos(t), -0.8 * np.sin(t)],
                      [0, 0.8 * np.sin(t), 0.8 * np.cos(t)]])
    a = q @ block @ q.T
    x = np.zeros((6, m))
    y = np.zeros((6, m))
    x[:3] = rng.standard_normal((3, m))
    y[:3] = a @ x[:3]
    x[3] = 3.0 * rng.standard_normal(m)
    y[4] = x[3]
    from resdmd.snapshot_io import SnapshotPairs
    return a, SnapshotPairs(x, y)


def clean_trajectories(rng, a, n_real=5, n_steps=10):
    """Noise-free trajectories of ``a`` padded to the 6 channels of the instance."""
    out = []
    for _ in range(n_real):
        s = np.zeros((6, n_steps + 1))
        s[:3, 0] = rng.standard_normal(3)
        for n in range(n_steps):
            s[:3, n + 1] = a @ s[:3, n]
        out.append(s)
    return out
