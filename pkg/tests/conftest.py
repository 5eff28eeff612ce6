import numpy as np
import pytest

from popper_sim import _backend, experiment, field
from popper_sim.experiment import ExperimentConfig

BACKENDS = sorted(_backend.available_backends())


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Route every kernel call through one backend for the duration of a test."""
    mod = _backend.available_backends()[request.param]
    monkeypatch.setattr(field, "kernels", mod)
    monkeypatch.setattr(experiment, "kernels", mod)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def default_config():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def small_config():
    """Coarser grid and fewer emitters; same geometry."""
    return ExperimentConfig(grid_n_samples=16384, n_source_points=16)


def pytest_terminal_summary(terminalreporter):
    import sys

    results = {}
    for name, mod in list(sys.modules.items()):
        if name.rsplit(".", 1)[-1] == "test_acceptance":
            results.update(getattr(mod, "RESULTS", {}))
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
