import numpy as np
import pytest

from gated_eoc.criterion import extract_MLR, realization_gain
from gated_eoc.disorder import BiasScheme, NetworkConfig, realize
from gated_eoc.dynamics import run_autonomous
from gated_eoc.errors import ContractError
from gated_eoc.spectrum import (
    build_jacobian,
    eigenvalues,
    radius_vs_gain_sweep,
    spectral_radius,
)


def test_radius_of_scaled_identity():
    est = spectral_radius(0.5 * np.eye(100))
    assert abs(est.radius - 0.5) < 1e-8 and est.converged


def test_radius_of_embedded_diagonal():
    J = np.zeros((50, 50))
    J[3, 3], J[17, 17] = 0.1, 0.9
    assert abs(spectral_radius(J, rng=1).radius - 0.9) < 1e-8


def test_radius_of_scaled_rotation():
    th = 0.7
    J = 0.7 * np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    assert abs(spectral_radius(J, rng=0).radius - 0.7) < 1e-8


def test_zero_matrix_and_bad_input():
    assert spectral_radius(np.zeros((4, 4))).radius == 0.0
    with pytest.raises(ContractError):
        spectral_radius(np.ones((2, 3)))
    with pytest.raises(ContractError):
        spectral_radius(np.full((2, 2), np.nan))


@pytest.mark.parametrize("arch, bias", [("lstm", BiasScheme.gaussian(1.0)),
                                        ("gru", BiasScheme.gaussian(2.0)),
                                        ("rnn", BiasScheme.zero())])
def test_power_iteration_matches_dense_eigensolver(arch, bias):
    real = realize(NetworkConfig(arch=arch, N=200, bias=bias, seed=3))
    J = build_jacobian(real, None, 1.7)
    est = spectral_radius(J, rng=0)
    assert est.radius == pytest.approx(np.max(np.abs(eigenvalues(J))), rel=1e-6)


def test_jacobian_special_forms(make_real):
    real = make_real("lstm", N=30)
    J = build_jacobian(real, None, 0.0).J
    assert np.array_equal(J, np.diag(extract_MLR(real).M))
    J = build_jacobian(real, None, 1.6).J
    np.testing.assert_allclose(J, 0.5 * np.eye(30) + 0.4 * real.U, rtol=1e-15, atol=1e-16)
    gru = make_real("gru", N=30, bias=BiasScheme.gaussian(1.0), seed=2)
    z, r = (1 / (1 + np.exp(-gru.gate_b[k])) for k in ("z", "r"))
    expected = np.eye(30) - np.diag(z) + 1.3 * np.diag(z) @ gru.U @ np.diag(r)
    np.testing.assert_allclose(build_jacobian(gru, None, 1.3).J, expected, rtol=1e-12, atol=1e-15)


def test_jacobian_reconstruction_doubling(make_real):
    real = make_real("gru", N=40, bias=BiasScheme.gaussian(1.0), seed=9)
    off = ~np.eye(40, dtype=bool)
    a = build_jacobian(real, None, 0.8).J
    b = build_jacobian(real, None, 1.6).J
    assert np.array_equal(b[off], 2 * a[off])
    M = extract_MLR(real).M
    np.testing.assert_allclose(np.diag(b) - M, 2 * (np.diag(a) - M), rtol=1e-12, atol=1e-16)


def test_jacobian_requires_zero_candidate_bias(make_real):
    real = make_real("lstm", N=10, bias=BiasScheme.gaussian(1.0, s_c=0.5))
    with pytest.raises(ContractError, match="candidate bias"):
        build_jacobian(real, None, 1.0)


def test_rnn_homogeneity(make_real):
    real = make_real("rnn", N=150, seed=5)
    base = spectral_radius(build_jacobian(real, None, 1.0), rng=0).radius
    scaled = spectral_radius(build_jacobian(real, None, 2.5), rng=0).radius
    assert scaled == pytest.approx(2.5 * base, rel=1e-7)


def test_full_spectrum_gate():
    with pytest.raises(ContractError):
        eigenvalues(np.eye(301))
    assert eigenvalues(np.eye(301), force=True).size == 301


def test_sweep_zero_gain_row():
    cfg = NetworkConfig(arch="lstm", N=100, bias=BiasScheme.gaussian(1.0))
    res = radius_vs_gain_sweep(cfg, [0.0, 1.0], replicas=3)
    expected = np.mean([np.max(extract_MLR(realize(cfg, replica=r)).M) for r in range(3)])
    assert res.column("radius_mean")[0] == pytest.approx(expected, rel=1e-8)
    assert res.column("radius_mean")[1] >= res.column("radius_mean")[0]
    with pytest.raises(ContractError):
        radius_vs_gain_sweep(cfg, [])


def test_spectrum_links_to_dynamics():
    real = realize(NetworkConfig(arch="gru", N=400, bias=BiasScheme.gaussian(1.0), seed=1))
    gc = realization_gain(real).g_c
    h0 = np.full(400, 1e-6)
    below = run_autonomous(real, None, 0.8 * gc, h0, 300)
    above = run_autonomous(real, None, 1.25 * gc, h0, 300)
    assert np.linalg.norm(below) < np.linalg.norm(h0)
    assert np.linalg.norm(above) > np.linalg.norm(h0)
