import numpy as np
import pytest

from gated_eoc.disorder import BiasScheme, NetworkConfig, realize


@pytest.fixture
def make_real():
    def _make(arch="lstm", N=50, K=1, bias=None, seed=0, replica=0):
        cfg = NetworkConfig(arch=arch, N=N, K=K, bias=bias or BiasScheme.zero(), seed=seed)
        return realize(cfg, replica=replica)

    return _make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def accept(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def _accept(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append((number, line))
        print(line, flush=True)
        assert ok, line

    return _accept


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
