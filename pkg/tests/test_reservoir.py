import numpy as np
import pytest

from gated_eoc.disorder import BiasScheme, NetworkConfig, realize
from gated_eoc.errors import ConfigurationError, ContractError, SingularSystemError
from gated_eoc.reservoir import (
    MackeyGlassConfig,
    ReservoirConfig,
    drive_reservoir,
    fit_ridge,
    mackey_glass,
    normalize_row,
    rc_heatmap,
    rc_run,
    rc_sweep,
    ridge_objective,
)

SMALL = ReservoirConfig(N=60, reservoir_washout=100, train_length=400, test_length=100,
                        mg=MackeyGlassConfig(washout=200))


# -- Mackey-Glass -------------------------------------------------------------------

def test_first_step_from_constant_history():
    u = mackey_glass(MackeyGlassConfig(history_init=0.5, length=30, washout=0))
    assert round(u[26], 7) == 0.5499024
    assert np.all(u[:26] == 0.5)


def test_beta_zero_is_geometric():
    u = mackey_glass(MackeyGlassConfig(beta=0.0, history_init=1.0, length=80, washout=0))
    t = np.arange(80 - 25)
    np.testing.assert_allclose(u[25:], 0.9 ** t, rtol=1e-13)


def test_default_series_bounded_and_aperiodic():
    cfg = MackeyGlassConfig(length=1000 + 10_000)
    u = mackey_glass(cfg)
    assert u.size == 10_000
    assert np.all((u > 0) & (u < 2))
    for p in range(1, 1001):
        assert not np.array_equal(u[p:], u[:-p])


@pytest.mark.parametrize("kwargs", [dict(tau=0), dict(tau=2.5), dict(length=10, washout=10)])
def test_mg_config_validation(kwargs):
    with pytest.raises(ConfigurationError):
        MackeyGlassConfig(**kwargs)


# -- driving ----------------------------------------------------------------------------

def test_zero_input_subcritical_decays():
    real = realize(NetworkConfig(arch="lstm", N=50))
    H = drive_reservoir(real, None, 1.0, np.ones(400), input_scale=0.0, washout=300)
    assert H.shape == (100, 50) and np.max(np.abs(H)) < 1e-20


def test_row_count_and_contracts():
    real = realize(NetworkConfig(arch="gru", N=20))
    assert drive_reservoir(real, None, 1.0, np.zeros(37), washout=7).shape == (30, 20)
    with pytest.raises(ContractError):
        drive_reservoir(real, None, 1.0, [0.1, np.inf])
    biased = realize(NetworkConfig(arch="gru", N=20, bias=BiasScheme.gaussian(1.0, s_c=1.0)))
    with pytest.raises(ContractError):
        drive_reservoir(biased, None, 1.0, np.zeros(5))


def test_features_are_rich_at_criticality():
    real = realize(NetworkConfig(arch="lstm", N=500))
    u = mackey_glass(MackeyGlassConfig(length=1000 + 3500))
    H = drive_reservoir(real, None, 2.0, u, washout=500)
    s = np.linalg.svd(H, compute_uv=False)
    rank = int(np.sum(s > s[0] * 1e-12))
    assert rank > 250


# -- ridge ---------------------------------------------------------------------------------

def test_exact_interpolation():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 8))
    y = X @ rng.normal(size=8) + 0.3
    model = fit_ridge(X, y, 0.0)
    assert np.mean((model.predict(X) - y) ** 2) <= 1e-16 * np.mean(y * y)
    assert model.weights[-1] == pytest.approx(0.3, abs=1e-10)


def test_large_lambda_gives_mean_model():
    rng = np.random.default_rng(1)
    X, y = rng.normal(size=(100, 5)), rng.normal(size=100)
    model = fit_ridge(X, y, 1e12)
    assert np.max(np.abs(model.weights[:-1])) < 1e-9
    assert model.weights[-1] == pytest.approx(y.mean(), abs=1e-8)


def test_matches_independent_dense_solve():
    rng = np.random.default_rng(2)
    X, y = rng.normal(size=(100, 10)), rng.normal(size=100)
    lam = 1e-3
    A = np.hstack([X, np.ones((100, 1))])
    P = np.eye(11)
    P[-1, -1] = 0.0
    ref = np.linalg.solve(A.T @ A + lam * P, A.T @ y)
    model = fit_ridge(X, y, lam)
    np.testing.assert_allclose(model.weights, ref, rtol=1e-10, atol=1e-12)
    assert model.residual <= 1e-8


def test_rank_deficient_without_ridge():
    X = np.ones((10, 3))
    with pytest.raises(SingularSystemError, match="ridge_lambda"):
        fit_ridge(X, np.arange(10.0), 0.0)
    with pytest.raises(ContractError):
        fit_ridge(np.ones((5, 2)), np.ones(4))


def test_ridge_optimality_under_perturbation():
    rng = np.random.default_rng(3)
    X, y = rng.normal(size=(80, 6)), rng.normal(size=80)
    model = fit_ridge(X, y, 0.1)
    best = ridge_objective(model, X, y)
    for j in range(model.weights.size):
        for d in (1e-3, -1e-3):
            w = model.weights.copy()
            w[j] += d
            moved = type(model)(weights=w, ridge_lambda=model.ridge_lambda)
            assert ridge_objective(moved, X, y) >= best


# -- runs and sweeps ----------------------------------------------------------------------

def test_rc_run_is_deterministic():
    a = rc_run(SMALL, 1.8, 0.0, seed=4)
    b = rc_run(SMALL, 1.8, 0.0, seed=4)
    assert a == b and a.train_mse >= 0 and a.test_mse >= 0


def test_series_too_short():
    with pytest.raises(ContractError):
        rc_run(SMALL, 1.0, series=np.ones(10))


def test_sweep_rows():
    res = rc_sweep(SMALL, [0.5, 1.0], [0, 1], s_b=1.0)
    assert len(res) == 4
    assert res.columns == ["s_b", "g", "g_over_gc", "N", "seed", "train_mse", "test_mse"]


def test_normalize_row():
    np.testing.assert_array_equal(normalize_row([2.0, 4.0, 3.0]), [0.0, 1.0, 0.5])
    np.testing.assert_array_equal(normalize_row([7.0]), [1.0])


def test_heatmap_rows_span_unit_interval():
    res = rc_heatmap(SMALL, [0.0, 1.0], [0.5, 1.0, 1.5], [0])
    for s_b in (0.0, 1.0):
        vals = [v for s, v in zip(res.column("s_b"), res.column("normalized_accuracy")) if s == s_b]
        assert min(vals) == 0.0 and max(vals) == 1.0
    single = rc_heatmap(SMALL, [0.0], [1.0], [0])
    assert single.column("normalized_accuracy") == [1.0]
    with pytest.raises(ContractError):
        rc_heatmap(SMALL, [], [1.0], [0])


def test_washout_independence_near_optimum():
    base = ReservoirConfig()
    longer = ReservoirConfig(reservoir_washout=1000)
    for ratio in (0.75, 1.0):
        a = rc_run(base, 2.0 * ratio, 0.0, seed=1)
        b = rc_run(longer, 2.0 * ratio, 0.0, seed=1)
        assert abs(b.test_mse / a.test_mse - 1) < 0.05


def test_reservoir_washout_cannot_exceed_series_washout():
    with pytest.raises(ConfigurationError):
        ReservoirConfig(reservoir_washout=2000)
