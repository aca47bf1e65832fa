import numpy as np
import pytest

from conftest import clean_trajectories, random_orthogonal, spurious_instance
from resdmd.errors import ShapeError
from resdmd.exact_dmd import exact_dmd, exact_pseudo_point
from resdmd.kernel_edmd import kedmd, kedmd_pseudo_point
from resdmd.kernels import KernelSpec
from resdmd.snapshot_io import SnapshotPairs, mean_subtract
from resdmd.spectral import (PseudospectrumGrid, eigfun_evaluator, filter_modes, fit_kmd,
                             forecast, grid_sweep, mise, parse_grid)


def linear_system(rng, d=4, m=60):
    q = random_orthogonal(rng, d)
    a = q @ np.diag(np.linspace(0.95, 0.5, d)) @ q.T
    x = rng.standard_normal((d, m))
    return a, SnapshotPairs(x, a @ x)


def trajectory(a, x0, n):
    out = [x0]
    for _ in range(n):
        out.append(a @ out[-1])
    return np.column_stack(out)


# ---- grids -------------------------------------------------------------------

def test_parse_grid():
    re, im = parse_grid("-1.5:1.5:61,-1:1:3")
    assert re.size == 61 and re[0] == -1.5 and re[-1] == 1.5
    np.testing.assert_array_equal(im, [-1, 0, 1])
    with pytest.raises(ValueError):
        parse_grid("1:2:3")
    with pytest.raises(ValueError):
        parse_grid("0:1:0,0:1:2")


def test_grid_zero_at_exact_eigenvalue(rng):
    a = np.diag([0.5, -0.5])
    x = rng.standard_normal((2, 10))
    res = exact_dmd(SnapshotPairs(x, a @ x), 2)
    grid = grid_sweep(lambda z: exact_pseudo_point(res, z), [-0.5, 0, 0.5], [0.0])
    assert grid.tau[0, 0] <= 1e-12 and grid.tau[0, 2] <= 1e-12
    assert grid.tau[0, 1] == pytest.approx(0.5)


def test_grid_conjugate_symmetry(rng):
    x, y = rng.standard_normal((2, 5, 40))
    res = exact_dmd(SnapshotPairs(x, y), 5)
    axis = np.linspace(-1.5, 1.5, 9)
    grid = grid_sweep(lambda z: exact_pseudo_point(res, z), axis, axis)
    np.testing.assert_allclose(grid.tau, grid.tau[::-1], atol=1e-10)


def test_grid_layout_and_sublevels(rng):
    x, y = rng.standard_normal((2, 4, 30))
    res = exact_dmd(SnapshotPairs(x, y), 4)
    re, im = np.linspace(-1, 1, 5), np.linspace(0, 1, 3)
    grid = grid_sweep(lambda z: exact_pseudo_point(res, z), re, im, epsilon=0.3)
    assert grid.tau.shape == (3, 5)
    assert grid.tau[2, 1] == exact_pseudo_point(res, complex(re[1], im[2]))[0]
    assert np.all(grid.sublevel(0.1) <= grid.sublevel(0.5))
    np.testing.assert_array_equal(grid.sublevel(), grid.tau < 0.3)
    d = grid.to_dict()
    assert d["shape"] == [3, 5] and len(d["tau"]) == 15


def test_grid_independent_of_order_and_workers(rng, monkeypatch):
    res = kedmd(SnapshotPairs(*rng.standard_normal((2, 3, 20))), KernelSpec("gaussian"), 10)
    point = lambda z: kedmd_pseudo_point(res, z)
    axis = np.linspace(-1, 1, 7)
    ref = grid_sweep(point, axis, axis, workers=1)
    monkeypatch.setenv("RESDMD_THREADS", "3")
    threaded = grid_sweep(point, axis[::-1], axis, workers=3)
    np.testing.assert_array_equal(threaded.tau, ref.tau)


def test_grid_shape_check():
    with pytest.raises(ShapeError):
        PseudospectrumGrid(np.zeros(2), np.zeros(3), np.zeros((2, 3)))


# ---- filter_modes ------------------------------------------------------------

def test_filter_modes_examples():
    lam = np.array([0.9, 0.5 + 0.1j])
    np.testing.assert_array_equal(filter_modes(lam, [0, 0], 1e-9), [0, 1])
    np.testing.assert_array_equal(filter_modes(lam, [0.1, 0.5], 0.3), [0])
    assert filter_modes(lam, [0.1, 0.5], 0.01).size == 0
    with pytest.raises(ValueError):
        filter_modes(lam, [0.1, 0.5], 0)
    with pytest.raises(ShapeError):
        filter_modes(lam, [0.1], 0.5)


# ---- KMD forecasting ---------------------------------------------------------

def test_one_step_reconstruction(rng):
    a, pairs = linear_system(rng)
    res = exact_dmd(pairs, 4)
    model = fit_kmd(res, pairs, 4)
    recon = (model.modes @ (model.eigenvalues[:, None] * model.eigfun_on_data.T)).real
    assert np.linalg.norm(recon - pairs.y_matrix) <= 1e-6 * np.linalg.norm(pairs.y_matrix)
    g = eigfun_evaluator(model)
    step = forecast(model, pairs.x_matrix[:, 0], g, 1)
    np.testing.assert_allclose(step[:, 0], pairs.y_matrix[:, 0], atol=1e-6)


def test_full_mode_forecast_ten_steps(rng):
    a, pairs = linear_system(rng)
    model = fit_kmd(exact_dmd(pairs, 4), pairs, 4)
    x0 = rng.standard_normal(4)
    truth = trajectory(a, x0, 10)[:, 1:]
    pred = forecast(model, x0, eigfun_evaluator(model), 10)
    assert np.linalg.norm(pred - truth) <= 1e-5 * np.linalg.norm(truth)


def test_forecast_with_mean(rng):
    a, pairs = linear_system(rng)
    shift = np.array([1.0, -2.0, 3.0, 0.5])
    raw = SnapshotPairs(pairs.x_matrix + shift[:, None], pairs.y_matrix + shift[:, None])
    centred, mean = mean_subtract(raw)
    model = fit_kmd(exact_dmd(centred, 4), centred, 4, mean=mean)
    pred = forecast(model, raw.x_matrix[:, 5], eigfun_evaluator(model), 1)
    # the centred data still obey y - mean = A (x - mean) + (A - I) mean, so only check shape
    assert pred.shape == (4, 1)
    np.testing.assert_allclose(model.mean, mean)


def test_empty_model(rng):
    a, pairs = linear_system(rng)
    model = fit_kmd(exact_dmd(pairs, 4), pairs, 0, mean=np.ones(4))
    out = forecast(model, np.zeros(4), eigfun_evaluator(model), 3)
    np.testing.assert_array_equal(out, np.ones((4, 3)))


def test_forecast_decays_inside_unit_disk(rng):
    a, pairs = linear_system(rng)
    model = fit_kmd(exact_dmd(pairs, 4), pairs, 4)
    pred = forecast(model, rng.standard_normal(4), eigfun_evaluator(model), 200)
    norms = np.linalg.norm(pred, axis=0)
    assert np.all(np.diff(norms[20:]) <= 1e-12) and norms[-1] < 1e-3


def test_single_unit_mode_is_constant():
    from resdmd.spectral import ForecastModel, ModeOrder
    model = ForecastModel(np.array([1.0 + 0j]), np.array([[1.0], [0.0]], dtype=complex),
                          np.zeros((1, 1)), ModeOrder(np.array([0]), "residual"),
                          np.zeros(1), np.zeros(2))
    out = forecast(model, np.zeros(2), lambda x: np.array([1.0]), 5)
    np.testing.assert_array_equal(out, np.tile([[1.0], [0.0]], 5))


def test_residual_ordering_excludes_spurious_mode(rng):
    a, pairs = spurious_instance(rng)
    res = exact_dmd(pairs, 4)
    spurious = int(np.argmax(res.residuals))
    assert abs(res.eigenvalues[spurious]) < 0.2
    model = fit_kmd(res, pairs, 3, "residual")
    assert spurious not in model.mode_order.indices
    pca = fit_kmd(res, pairs, 3, "pca")
    assert model.residuals.sum() <= pca.residuals.sum() + 1e-12
    truth = clean_trajectories(rng, a)
    scores = [mise([forecast(m, t[:, 0], eigfun_evaluator(m), 10) for t in truth],
                   [t[:, 1:] for t in truth]) for m in (model, pca)]
    assert scores[0] < scores[1]


def test_residual_sum_ordering(rng):
    x, y = rng.standard_normal((2, 6, 50))
    pairs = SnapshotPairs(x, y)
    res = exact_dmd(pairs, 6)
    for k in range(1, 6):
        r = fit_kmd(res, pairs, k, "residual").residuals.sum()
        assert r <= np.sort(res.residuals)[:k].sum() + 1e-12


def test_kernel_forecast_linear_kernel(rng):
    a, pairs = linear_system(rng, d=3, m=80)
    spec = KernelSpec("polynomial", 1.0, 1)
    res = kedmd(pairs, spec)
    model = fit_kmd(res, pairs, res.rank)
    g = eigfun_evaluator(model, pairs)
    x0 = pairs.x_matrix[:, 7]
    truth = trajectory(a, x0, 5)[:, 1:]
    pred = forecast(model, x0, g, 5)
    assert np.linalg.norm(pred - truth) <= 1e-6 * np.linalg.norm(truth)


def test_kernel_eigenfunction_scale_absorbed(rng):
    a, pairs = linear_system(rng, d=3, m=80)
    spec = KernelSpec("gaussian", 2.0)
    res = kedmd(pairs, spec, rank=15)
    model = fit_kmd(res, pairs, 8)
    g = eigfun_evaluator(model, pairs)
    scaled = type(model)(**{**model.__dict__, "modes": model.modes / 7.5})
    x0 = pairs.x_matrix[:, 0]
    np.testing.assert_allclose(forecast(model, x0, g, 4),
                               forecast(scaled, x0, lambda x: 7.5 * g(x), 4), atol=1e-10)
    # the fit absorbs a global eigenfunction scale by construction
    xi, *_ = np.linalg.lstsq(7.5 * model.eigfun_on_data, pairs.x_matrix.T.astype(complex),
                             rcond=None)
    np.testing.assert_allclose(xi.T, model.modes / 7.5, atol=1e-8)


def test_fit_kmd_argument_checks(rng):
    a, pairs = linear_system(rng)
    res = exact_dmd(pairs, 4)
    with pytest.raises(ValueError):
        fit_kmd(res, pairs, 5)
    with pytest.raises(ValueError):
        fit_kmd(res, pairs, 2, "energy")
    model = fit_kmd(res, pairs, 2)
    with pytest.raises(ValueError):
        forecast(model, np.zeros(4), eigfun_evaluator(model), 0)


# ---- mise ----------------------------------------------------------------------

def test_mise_examples():
    t = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert mise([t], [t]) == 0
    assert mise([np.zeros_like(t)], [t]) == 1
    delta = 0.1
    assert mise([t + delta], [t]) == pytest.approx(4 * delta ** 2 / 30)
    assert mise([t, np.zeros_like(t)], [t, t]) == pytest.approx(0.5)
    with pytest.raises(ShapeError):
        mise([t], [t[:, :1]])
