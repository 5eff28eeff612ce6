import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from popper_sim.field import (
    DIRECT_ORACLE_MAX_SAMPLES,
    ComplexField1D,
    Grid1D,
    SamplingWarning,
    edge_taper,
    fresnel_output_grid,
    make_field,
    momentum_distribution,
    point_source,
    propagate_angular_spectrum,
    propagate_direct_oracle,
    propagate_fresnel,
    spectrum,
    transfer_function,
)

LAM = 633e-9


def gaussian(grid, w0, center=0.0, tilt=0.0):
    k = 2 * np.pi / LAM
    return make_field(grid, LAM, lambda y: np.exp(-((y - center) / w0) ** 2 + 1j * k * tilt * y))


def gaussian_beam(y, z, w0):
    """Paraxial 1-D Gaussian beam ``exp(-y^2/w0^2)`` after distance ``z``."""
    k = 2 * np.pi / LAM
    q0 = -0.5j * k * w0**2
    q = q0 + z
    return np.exp(1j * k * z) * np.sqrt(q0 / q) * np.exp(1j * k * y**2 / (2 * q))


def rel_l2(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


# grid and field construction

def test_grid_coordinates_are_centred():
    g = Grid1D(8, 0.5)
    np.testing.assert_allclose(g.y, [-2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5])
    assert g.y[g.n_samples // 2] == 0
    assert g.k[g.n_samples // 2] == 0
    assert g.dk == pytest.approx(2 * np.pi / 4)
    assert g.index_of(0.26) == 5


@pytest.mark.parametrize("n, dx", [(7, 1.0), (0, 1.0), (8, 0.0), (8, -1.0)])
def test_grid_rejects_bad_parameters(n, dx):
    with pytest.raises(ValueError):
        Grid1D(n, dx)


def test_from_window_matches_width():
    g = Grid1D.from_window(40e-3, 32768)
    assert g.width == pytest.approx(40e-3)


def test_make_field_reports_first_bad_sample():
    g = Grid1D(16, 1e-6)
    with pytest.raises(ValueError, match="sample 3"):
        make_field(g, LAM, lambda y: np.where(np.arange(16) == 3, np.nan, 1.0))


def test_field_amplitude_is_read_only():
    f = gaussian(Grid1D(64, 1e-6), 5e-6)
    with pytest.raises(ValueError):
        f.amplitude[0] = 1


@pytest.mark.parametrize("model", ["bandlimited", "sample", "gaussian"])
def test_point_source_has_unit_power_and_sits_at_position(model):
    g = Grid1D(4096, 1e-6)
    f = point_source(g, LAM, 20e-6, model=model)
    assert f.power == pytest.approx(1.0, rel=1e-12)
    assert g.y[np.argmax(f.intensity)] == pytest.approx(20e-6, abs=g.dx)


def test_bandlimited_point_source_spectrum_is_confined():
    g = Grid1D(4096, 1e-6)
    f = point_source(g, LAM, 0.0, half_angle=10e-3, taper_angle=2e-3)
    k, spec = spectrum(f)
    kmax = 2 * np.pi / LAM * math.sin(12e-3)
    assert np.all(np.abs(spec[np.abs(k) > kmax * 1.001]) < 1e-12 * np.abs(spec).max())


def test_spectrum_of_gaussian_matches_analytic_transform():
    g = Grid1D(2048, 1e-6)
    w0 = 30e-6
    k, spec = spectrum(gaussian(g, w0))
    analytic = math.sqrt(math.pi) * w0 * np.exp(-(k * w0) ** 2 / 4)
    np.testing.assert_allclose(spec, analytic, atol=1e-12 * analytic.max())


# propagators

def test_fresnel_matches_analytic_gaussian_beam():
    g = Grid1D(2048, 2e-6)
    w0, z = 60e-6, 0.05
    out = propagate_fresnel(gaussian(g, w0), z)
    assert rel_l2(out.amplitude, gaussian_beam(out.grid.y, z, w0)) < 1e-9


def test_angular_spectrum_matches_analytic_gaussian_beam():
    g = Grid1D(2048, 2e-6)
    w0, z = 60e-6, 0.05
    out = propagate_angular_spectrum(gaussian(g, w0), z)
    # nonparaxial correction only: k z theta^4 / 8 with theta ~ 1/(k w0)
    assert rel_l2(out.amplitude, gaussian_beam(g.y, z, w0)) < 1e-5


def test_oracle_matches_analytic_gaussian_beam():
    g = Grid1D(1024, 2e-6)
    w0, z = 60e-6, 0.03
    out = propagate_direct_oracle(gaussian(g, w0), z)
    assert rel_l2(out.amplitude, gaussian_beam(g.y, z, w0)) < 1e-9


def test_fresnel_output_pitch():
    g = Grid1D(1024, 2e-6)
    f = gaussian(g, 50e-6)
    assert fresnel_output_grid(f, 0.1).dx == pytest.approx(LAM * 0.1 / (1024 * 2e-6))
    assert propagate_fresnel(f, 0.1).grid == fresnel_output_grid(f, 0.1)


def test_zero_distance_is_identity():
    f = gaussian(Grid1D(256, 2e-6), 20e-6)
    np.testing.assert_array_equal(propagate_angular_spectrum(f, 0.0).amplitude, f.amplitude)


@pytest.mark.parametrize("z", [-1e-3, float("nan")])
def test_negative_distance_rejected(z):
    f = gaussian(Grid1D(256, 2e-6), 20e-6)
    with pytest.raises(ValueError):
        propagate_angular_spectrum(f, z)


@pytest.mark.parametrize("prop", [propagate_fresnel, propagate_direct_oracle])
def test_paraxial_propagators_need_positive_distance(prop):
    f = gaussian(Grid1D(256, 2e-6), 20e-6)
    with pytest.raises(ValueError):
        prop(f, 0.0)


def test_coarse_grid_is_noted_not_rejected():
    f = gaussian(Grid1D(256, 2e-6), 20e-6)
    out = propagate_angular_spectrum(f, 1e-3)
    assert any("alias" in n for n in out.notes)
    fine = make_field(Grid1D(256, 0.2e-6), LAM, lambda y: np.exp(-(y / 5e-6) ** 2))
    assert propagate_angular_spectrum(fine, 1e-5).notes == ()


def test_evanescent_components_decay():
    g = Grid1D(256, 0.1e-6)  # band edge well beyond 2*pi/lambda
    f = make_field(g, LAM, lambda y: np.cos(2 * np.pi * y / 0.4e-6))
    out = propagate_angular_spectrum(f, 5e-6)
    assert out.power < 1e-12 * f.power


def test_oracle_warns_above_size_bound():
    n = DIRECT_ORACLE_MAX_SAMPLES + 2
    f = ComplexField1D(Grid1D(n, 1e-6), np.zeros(n), LAM)
    small_out = Grid1D(4, 1e-6)
    with pytest.warns(SamplingWarning, match="O\\(n\\^2\\)"):
        propagate_direct_oracle(f, 0.01, small_out)


def test_transfer_function_is_cached_and_read_only():
    g = Grid1D(128, 1e-6)
    a = transfer_function(g, LAM, 0.01, False)
    assert transfer_function(g, LAM, 0.01, False) is a
    assert not a.flags.writeable


def test_band_limit_suppresses_wrap_around():
    g = Grid1D(1024, 1e-6)
    f = make_field(g, LAM, lambda y: (np.abs(y) < 5e-6).astype(float))
    z = 0.05
    plain = propagate_angular_spectrum(f, z)
    limited = propagate_angular_spectrum(f, z, band_limit=True)
    assert limited.power < plain.power
    assert plain.power == pytest.approx(f.power, rel=1e-12)


# momentum distribution and tapers

def test_momentum_distribution_is_normalised_density():
    g = Grid1D(1024, 2e-6)
    f = gaussian(g, 30e-6)
    m = momentum_distribution(f)
    assert np.sum(m.density) * m.dk == pytest.approx(1.0)
    assert m.power == pytest.approx(f.power, rel=1e-12)
    # |FT|^2 of exp(-y^2/w0^2) has RMS k-spread 1/w0
    sigma = math.sqrt(np.sum(m.k_samples**2 * m.density) * m.dk)
    assert sigma == pytest.approx(1 / 30e-6, rel=1e-6)


def test_momentum_distribution_of_zero_field_rejected():
    f = ComplexField1D(Grid1D(16, 1e-6), np.zeros(16), LAM)
    with pytest.raises(ValueError, match="zero-power"):
        momentum_distribution(f)


def test_edge_taper_leaves_centre_untouched():
    g = Grid1D(200, 1.0)
    f = ComplexField1D(g, np.ones(200), LAM)
    t = edge_taper(f, 0.1)
    np.testing.assert_array_equal(t.amplitude[40:160], 1.0)
    assert abs(t.amplitude[0]) < 1e-3
    with pytest.raises(ValueError):
        edge_taper(f, 0.5)


# properties

_fields = st.lists(
    st.tuples(
        st.floats(-2e-4, 2e-4),  # centre
        st.floats(20e-6, 80e-6),  # width
        st.floats(-1, 1),
        st.floats(-1, 1),
        st.floats(-2e-3, 2e-3),  # tilt
    ),
    min_size=1,
    max_size=3,
)


def _build(grid, spec):
    k = 2 * np.pi / LAM

    def profile(y):
        out = np.zeros_like(y, dtype=complex)
        for c, w, re, im, th in spec:
            out += (re + 1j * im + 0.1) * np.exp(-((y - c) / w) ** 2 + 1j * k * th * y)
        return out

    return make_field(grid, LAM, profile)


PROP_GRID = Grid1D(512, 2e-6)


@settings(max_examples=40, deadline=None)
@given(_fields, st.floats(1e-4, 0.05))
def test_angular_spectrum_conserves_power(spec, z):
    f = _build(PROP_GRID, spec)
    assert propagate_angular_spectrum(f, z).power == pytest.approx(f.power, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(_fields, st.floats(1e-3, 0.05))
def test_fresnel_conserves_power(spec, z):
    f = _build(PROP_GRID, spec)
    assert propagate_fresnel(f, z).power == pytest.approx(f.power, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(_fields, _fields, st.complex_numbers(max_magnitude=5), st.floats(1e-3, 0.05))
def test_angular_spectrum_is_linear(a, b, c, z):
    fa, fb = _build(PROP_GRID, a), _build(PROP_GRID, b)
    combo = fa.replace(amplitude=c * fa.amplitude + fb.amplitude)
    lhs = propagate_angular_spectrum(combo, z).amplitude
    rhs = c * propagate_angular_spectrum(fa, z).amplitude + propagate_angular_spectrum(fb, z).amplitude
    scale = max(np.abs(rhs).max(), 1e-300)
    assert np.abs(lhs - rhs).max() <= 1e-10 * scale


@settings(max_examples=30, deadline=None)
@given(_fields, st.floats(1e-4, 0.03), st.floats(1e-4, 0.03))
def test_angular_spectrum_composes(spec, z1, z2):
    f = _build(PROP_GRID, spec)
    once = propagate_angular_spectrum(f, z1 + z2).amplitude
    twice = propagate_angular_spectrum(propagate_angular_spectrum(f, z1), z2).amplitude
    assert rel_l2(twice, once) < 1e-10


@settings(max_examples=15, deadline=None)
@given(_fields, st.floats(0.01, 0.05))
def test_fresnel_equals_oracle_riemann_sum(spec, z):
    f = _build(Grid1D(256, 4e-6), spec)
    fr = propagate_fresnel(f, z)
    assert rel_l2(fr.amplitude, propagate_direct_oracle(f, z, fr.grid).amplitude) < 1e-9


def test_oracle_is_backend_independent(backend):
    f = gaussian(Grid1D(1024, 2e-6), 60e-6, center=1e-4, tilt=1e-3)
    out = propagate_direct_oracle(f, 0.02)
    assert rel_l2(out.amplitude, propagate_angular_spectrum(f, 0.02).amplitude) < 1e-4
