import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import expit

from gated_eoc.architecture import ArchitectureSpec
from gated_eoc.disorder import BiasScheme, NetworkConfig, realize
from gated_eoc.dynamics import gate_values, run_autonomous, run_driven, step, trajectory
from gated_eoc.errors import ConfigurationError, ContractError, NumericalBlowupError
from gated_eoc.observables import q_of_state

ARCHS = ["rnn", "lstm", "gru"]


def test_table_of_special_cases():
    assert ArchitectureSpec("rnn").gates == () and ArchitectureSpec("rnn").psi == "id"
    assert ArchitectureSpec("lstm").gates == ("f", "i", "o") and ArchitectureSpec("lstm").psi == "tanh"
    assert ArchitectureSpec("gru").gates == ("z", "r") and ArchitectureSpec("gru").psi == "id"
    assert ArchitectureSpec("lstm").visible_state == "output-gated-tanh"
    assert ArchitectureSpec("gru").visible_state == "identity"
    for kind in ARCHS:
        a = ArchitectureSpec(kind)
        assert a.phi_prime0 == 1.0 and a.psi_prime0 == 1.0
    with pytest.raises(ConfigurationError):
        ArchitectureSpec("transformer")


@pytest.mark.parametrize("arch", ["lstm", "gru"])
def test_gates_collapse_at_origin(make_real, arch):
    real = make_real(arch, N=30)
    for v in gate_values(real, None, np.zeros(30), None, g=2.0).values():
        assert np.array_equal(v, np.full(30, 0.5))


@pytest.mark.parametrize("arch", ["lstm", "gru"])
def test_gates_equal_sigmoid_of_bias_at_origin(make_real, arch):
    real = make_real(arch, N=40, bias=BiasScheme.gaussian(1.3), seed=4)
    gates = gate_values(real, None, np.zeros(40), np.zeros(1), g=3.0)
    for name, v in gates.items():
        assert np.array_equal(v, expit(real.gate_b[name]))


def test_lstm_closed_output_gate_hides_state(make_real):
    real = make_real("lstm", N=25, bias=BiasScheme.gaussian(0.7), seed=2)
    real.gate_b["o"] = np.full(25, -30.0)
    h = np.random.default_rng(0).uniform(-1, 1, 25)
    gates = gate_values(real, None, h, None, g=1.0)
    assert np.all(gates["o"] < 1e-12)
    for name in ("f", "i"):
        np.testing.assert_allclose(gates[name], expit(real.gate_b[name]), rtol=0, atol=1e-12)


@given(st.sampled_from(["lstm", "gru"]), st.floats(0, 5), st.integers(0, 50))
@settings(max_examples=30, deadline=None)
def test_gate_ranges(arch, g, seed):
    real = realize(NetworkConfig(arch=arch, N=12, bias=BiasScheme.gaussian(2.0), seed=seed))
    h = np.random.default_rng(seed).normal(0, 3, 12)
    gates = gate_values(real, None, h, np.array([0.5]), g=g)
    for v in gates.values():
        assert np.all((v > 0) & (v < 1))
    if arch == "lstm":
        A = gates["f"] + gates["i"]
        assert np.all((A > 0) & (A < 2))
        alpha = gates["i"] / A
        assert np.all((alpha > 0) & (alpha < 1))


@pytest.mark.parametrize("arch", ["lstm", "gru"])
def test_step_at_zero_gain_halves_ones(make_real, arch):
    real = make_real(arch, N=10)
    out = step(real, None, 0.0, np.ones(10))
    assert np.array_equal(out, np.full(10, 0.5))


@pytest.mark.parametrize("arch", ARCHS)
def test_origin_is_fixed_point(make_real, arch):
    for seed in range(5):
        real = make_real(arch, N=20, bias=BiasScheme.gaussian(2.0), seed=seed)
        for g in (0.0, 1.0, 3.7):
            assert np.array_equal(step(real, None, g, np.zeros(20)), np.zeros(20))


def test_run_autonomous_geometric_contraction(make_real):
    real = make_real("lstm", N=8)
    hT = run_autonomous(real, None, 0.0, np.ones(8), 10)
    assert np.array_equal(hT, np.full(8, 2.0 ** -10))
    traj = run_autonomous(real, None, 0.0, np.ones(8), 0, store=True)
    assert traj.shape == (1, 8) and np.array_equal(traj[0], np.ones(8))
    traj = run_autonomous(real, None, 0.0, np.ones(8), 3, store=True)
    assert traj.shape == (4, 8)


def test_supercritical_lstm_state_persists():
    real = realize(NetworkConfig(arch="lstm", N=300, seed=1))
    hT = run_autonomous(real, None, 3.0, np.ones(300), 4000)
    assert np.all(np.isfinite(hT)) and np.max(np.abs(hT)) < 10.0
    assert q_of_state(hT) > 0.01


def test_batched_columns_match_single_runs(make_real):
    real = make_real("lstm", N=30, bias=BiasScheme.gaussian(1.0), seed=3)
    H = np.random.default_rng(1).normal(size=(30, 3))
    gains = np.array([0.5, 2.0, 3.5])
    batch = step(real, None, gains, H)
    for j in range(3):
        np.testing.assert_allclose(batch[:, j], step(real, None, gains[j], H[:, j]), rtol=1e-13, atol=1e-15)


def test_linearization_is_odd(make_real):
    # the map is odd up to second order around the origin
    real = make_real("gru", N=30, bias=BiasScheme.gaussian(1.0), seed=5)
    v = np.random.default_rng(2).normal(size=30) * 1e-7
    a, b = step(real, None, 1.5, v), step(real, None, 1.5, -v)
    np.testing.assert_allclose(a, -b, rtol=0, atol=1e-12)


@pytest.mark.parametrize("arch", ARCHS)
def test_boundedness_no_blowup(arch):
    real = realize(NetworkConfig(arch=arch, N=40, bias=BiasScheme.gaussian(1.0), seed=0))
    h = np.full(40, 3.0)
    for t in range(10_000):
        new = step(real, None, 4.0, h)
        if arch == "lstm":
            gates = gate_values(real, None, h, None, g=4.0)
            A = gates["f"] + gates["i"]
        else:
            A = np.ones_like(h)
        assert np.all(np.abs(new) <= A * np.maximum(np.abs(h), 1.0) + 1e-12)
        h = new
    assert np.all(np.isfinite(h))


def test_blowup_is_detected(make_real):
    real = make_real("rnn", N=5)
    real.b_c = np.full(5, np.nan)
    with pytest.raises(NumericalBlowupError) as info:
        list(trajectory(real, None, 1.0, np.zeros(5), 3))
    assert info.value.step == 1


def test_dimension_mismatch(make_real):
    real = make_real("gru", N=5)
    with pytest.raises(ContractError):
        step(real, None, 1.0, np.zeros(6))
    with pytest.raises(ContractError):
        step(real, None, 1.0, np.zeros(5), np.zeros(2))
    with pytest.raises(ContractError):
        step(real, "lstm", 1.0, np.zeros(5))


def test_driven_shapes_and_determinism(make_real):
    real = make_real("lstm", N=15, seed=9)
    u = np.sin(np.arange(50) / 5.0)
    a = run_driven(real, None, 1.5, np.ones(15), u)
    b = run_driven(real, None, 1.5, np.ones(15), u)
    assert a.shape == (50, 15) and np.array_equal(a, b)
    # first driven state equals one step with the first input
    np.testing.assert_array_equal(a[0], step(real, None, 1.5, np.ones(15), u[:1]))


def test_generic_activation_hook():
    arch = ArchitectureSpec("rnn", phi="tanh", psi="tanh")
    assert arch.psi_prime0 == 1.0
    real = realize(NetworkConfig(arch=arch, N=10))
    out = step(real, arch, 1.0, np.full(10, 0.1))
    np.testing.assert_allclose(out, np.tanh(real.U @ np.tanh(np.full(10, 0.1))))
