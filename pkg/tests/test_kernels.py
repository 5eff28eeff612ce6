import numpy as np
import pytest

from popper_sim import BACKEND, _backend, _kernels_py


def test_pure_python_env_var_forces_fallback(monkeypatch):
    import importlib

    monkeypatch.setenv("POPPER_SIM_PURE_PYTHON", "1")
    reloaded = importlib.reload(_backend)
    try:
        assert reloaded.BACKEND == "python"
        assert reloaded.kernels is _kernels_py
    finally:
        monkeypatch.delenv("POPPER_SIM_PURE_PYTHON")
        importlib.reload(_backend)


def test_default_backend_is_reported():
    assert BACKEND in _backend.available_backends()


@pytest.mark.skipif("cython" not in _backend.available_backends(), reason="extension not built")
def test_backends_agree_on_fresnel_sum(rng):
    ext = _backend.available_backends()["cython"]
    n = 300
    src = rng.normal(size=n) + 1j * rng.normal(size=n)
    src[::7] = 0  # exercises the zero-skip branch
    w = rng.uniform(0.5, 1.5, n)
    y_src = np.linspace(-1e-3, 1e-3, n)
    y_obs = np.linspace(-2e-3, 2e-3, 257)
    a = ext.fresnel_direct(src, w, y_src, y_obs, 1e7, 0.05)
    b = _kernels_py.fresnel_direct(src, w, y_src, y_obs, 1e7, 0.05)
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-10 * np.abs(b).max())


@pytest.mark.skipif("cython" not in _backend.available_backends(), reason="extension not built")
def test_backends_agree_on_intensity_accumulation(rng):
    ext = _backend.available_backends()["cython"]
    rows = rng.normal(size=(5, 64)) + 1j * rng.normal(size=(5, 64))
    np.testing.assert_allclose(ext.accumulate_intensity(rows),
                               _kernels_py.accumulate_intensity(rows), rtol=1e-14)


@pytest.mark.parametrize("name", sorted(_backend.available_backends()))
def test_fresnel_sum_matches_explicit_formula(name, rng):
    mod = _backend.available_backends()[name]
    src = rng.normal(size=12) + 1j * rng.normal(size=12)
    w = np.ones(12)
    y_src = np.arange(12) * 1e-5
    y_obs = np.arange(5) * 3e-5
    k, z = 2e6, 0.3
    expected = np.array([
        np.sum(src * np.exp(1j * k * (x - y_src) ** 2 / (2 * z))) for x in y_obs
    ])
    np.testing.assert_allclose(mod.fresnel_direct(src, w, y_src, y_obs, k, z), expected,
                               rtol=1e-12)


@pytest.mark.parametrize("name", sorted(_backend.available_backends()))
def test_accumulate_intensity_is_row_sum_of_squares(name, rng):
    mod = _backend.available_backends()[name]
    rows = rng.normal(size=(3, 10)) + 1j * rng.normal(size=(3, 10))
    np.testing.assert_allclose(mod.accumulate_intensity(rows), (np.abs(rows) ** 2).sum(0))
