import numpy as np
import pytest

from gated_eoc.disorder import BiasScheme, NetworkConfig, realize
from gated_eoc.dynamics import run_autonomous
from gated_eoc.errors import ContractError, NumericalBlowupError
from gated_eoc.observables import (
    default_tail_window,
    estimate_q_inf,
    mean_ci95,
    q_of_state,
)


def test_q_of_state_examples():
    assert q_of_state(np.zeros(5)) == 0.0
    assert q_of_state(np.ones(17)) == 1.0
    assert q_of_state([3.0, 4.0]) == 12.5


def test_tail_window_rule():
    assert default_tail_window(2000) == 500
    assert default_tail_window(100) == 25
    assert default_tail_window(2) == 1


def test_subcritical_lstm_decays():
    est = estimate_q_inf(NetworkConfig(arch="lstm", N=500), g=1.0, T=2000, replicas=2)
    assert est.mean_q_inf < 1e-6 and est.is_zero


def test_supercritical_lstm_is_active():
    est = estimate_q_inf(NetworkConfig(arch="lstm", N=500), g=3.0, T=2000, replicas=2)
    assert est.mean_q_inf > 0.01 and est.ci95_halfwidth >= 0


def test_random_field_regime_keeps_activity_below_gc():
    cfg = NetworkConfig(arch="lstm", N=300, bias=BiasScheme.gaussian(1.0, s_c=1.0))
    est = estimate_q_inf(cfg, g=1.0, T=1000, replicas=2)
    assert est.mean_q_inf > 0


def test_monotone_tail_subcritical():
    real = realize(NetworkConfig(arch="gru", N=200, seed=3))
    traj = run_autonomous(real, None, 1.0, np.ones(200), 2000, store=True)
    q = np.mean(traj ** 2, axis=1)
    t0 = int(np.argmax(q < 1e-3))
    assert q[t0] < 1e-3
    T = len(q) - 1
    assert q[T] < q[max(t0, T // 2)]
    assert np.all(np.diff(q[t0:]) <= 0)


def test_ci_shrinks_like_inverse_sqrt_replicas():
    rng = np.random.default_rng(0)
    widths = {}
    for R in (50, 200):
        # average over several draws so the ratio is not dominated by one sample
        widths[R] = np.mean([mean_ci95(rng.normal(1.0, 0.2, R))[1] for _ in range(200)])
    assert abs(widths[50] / widths[200] - 2.0) < 0.3 * 2.0


def test_ci_shrinks_on_replicas():
    cfg = NetworkConfig(arch="lstm", N=60, bias=BiasScheme.gaussian(1.0, s_c=1.0))
    small = estimate_q_inf(cfg, g=1.5, T=200, replicas=50)
    large = estimate_q_inf(cfg, g=1.5, T=200, replicas=200)
    assert abs(small.ci95_halfwidth / large.ci95_halfwidth - 2.0) < 0.3 * 2.0


def test_single_replica_has_zero_ci():
    assert mean_ci95([2.5]) == (2.5, 0.0)


def test_bad_tail_window():
    with pytest.raises(ContractError):
        estimate_q_inf(NetworkConfig(N=10), g=1.0, T=10, replicas=1, tail_window=11)


def test_blowup_carries_seed():
    cfg = NetworkConfig(arch="rnn", N=10, seed=77)
    with pytest.raises(NumericalBlowupError) as info:
        estimate_q_inf(cfg, g=1.0, T=5, replicas=1, h0=np.full(10, np.nan))
    assert info.value.seed == 77


def test_row_layout():
    cfg = NetworkConfig(arch="gru", N=20)
    est = estimate_q_inf(cfg, g=0.5, T=40, replicas=3)
    row = est.row(cfg)
    assert list(row) == ["g", "s_b", "s_c", "N", "T", "replicas", "mean_q_inf", "ci95"]
