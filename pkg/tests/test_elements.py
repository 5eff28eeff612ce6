import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from popper_sim.elements import (
    ApertureProfile,
    LensSpec,
    apply_aperture,
    apply_lens,
    image_distance,
    magnification,
)
from popper_sim.field import ComplexField1D, Grid1D, point_source, propagate_angular_spectrum

LAM = 702.2e-9


def plane_wave(grid):
    return ComplexField1D(grid, np.ones(grid.n_samples), LAM)


def test_lens_conserves_power_and_zero_field():
    g = Grid1D(1024, 2e-6)
    rng = np.random.default_rng(3)
    f = ComplexField1D(g, rng.normal(size=1024) + 1j * rng.normal(size=1024), LAM)
    assert apply_lens(f, LensSpec(0.5)).power == pytest.approx(f.power, rel=1e-13)
    zero = ComplexField1D(g, np.zeros(1024), LAM)
    assert not np.any(apply_lens(zero, LensSpec(0.5)).amplitude)


def test_zero_focal_length_rejected():
    with pytest.raises(ValueError):
        LensSpec(0.0)


def test_plane_wave_focuses_within_three_diffraction_widths():
    g = Grid1D(8192, 2e-6)
    f = 0.5
    out = propagate_angular_spectrum(apply_lens(plane_wave(g), LensSpec(f)), f)
    width = LAM * f / g.width
    inside = np.abs(g.y) <= 3 * width
    assert out.intensity[inside].sum() / out.intensity.sum() >= 0.90


def test_point_at_two_f_reimages_inverted():
    g = Grid1D(16384, 2e-6)
    f = 0.5
    pos = 50e-6
    src = point_source(g, LAM, pos)
    out = propagate_angular_spectrum(apply_lens(propagate_angular_spectrum(src, 2 * f),
                                                LensSpec(f)), 2 * f)
    assert abs(g.y[np.argmax(out.intensity)] - (-pos)) <= g.dx


def test_open_aperture_is_identity():
    f = plane_wave(Grid1D(64, 1e-6))
    assert apply_aperture(f, ApertureProfile.open()) is f


def test_rect_power_ratio_on_plane_wave():
    g = Grid1D(10000, 1e-6)
    out = apply_aperture(plane_wave(g), ApertureProfile.rect(0.16e-3))
    # one edge sample falls exactly on the boundary and is excluded
    ratio = out.power / plane_wave(g).power
    assert ratio == pytest.approx(0.16e-3 / g.width, abs=g.dx / g.width)


def test_wide_rect_leaves_confined_field_unchanged():
    g = Grid1D(4096, 1e-6)
    f = ComplexField1D(g, np.where(np.abs(g.y) < 1e-3, 1.0 + 0.5j, 0), LAM)
    out = apply_aperture(f, ApertureProfile.rect(3e-3))
    np.testing.assert_allclose(out.amplitude, f.amplitude, atol=1e-12)


def test_rect_edge_sample_is_excluded():
    g = Grid1D(8, 1.0)  # samples at -4..3
    t = ApertureProfile.rect(4.0).transmission(g)
    np.testing.assert_array_equal(t, [0, 0, 0, 1, 1, 1, 0, 0])


def test_rect_center_offset():
    g = Grid1D(8, 1.0)
    t = ApertureProfile.rect(2.5).transmission(g, center=2.0)
    np.testing.assert_array_equal(g.y[t > 0], [1, 2, 3])


def test_gaussian_aperture_intensity_rms():
    g = Grid1D(4096, 1e-6)
    out = apply_aperture(plane_wave(g), ApertureProfile.gaussian(100e-6))
    w = out.intensity / out.intensity.sum()
    assert np.sqrt(np.sum(w * g.y**2)) == pytest.approx(100e-6, rel=1e-6)


def test_tabulated_rejects_mismatched_grid():
    g = Grid1D(16, 1.0)
    ap = ApertureProfile.tabulated(np.linspace(0, 1, 16), g)
    with pytest.raises(ValueError, match="tabulated"):
        apply_aperture(plane_wave(Grid1D(16, 2.0)), ap)
    shifted = ap.transmission(g, center=2.0)
    np.testing.assert_array_equal(shifted, np.roll(ap.samples, 2))
    with pytest.raises(ValueError, match="whole samples"):
        ap.transmission(g, center=0.5)


@pytest.mark.parametrize("bad", [
    lambda: ApertureProfile.rect(0),
    lambda: ApertureProfile.gaussian(-1e-3),
    lambda: ApertureProfile.tabulated(np.full(4, 1.5), Grid1D(4, 1.0)),
    lambda: ApertureProfile.tabulated(np.ones(3), Grid1D(4, 1.0)),
    lambda: ApertureProfile("triangle"),
])
def test_invalid_apertures_rejected(bad):
    with pytest.raises(ValueError):
        bad()


@pytest.mark.parametrize("a, f, b", [(1.0, 0.5, 1.0), (0.75, 0.5, 1.5), (0.6, 0.3, 0.6)])
def test_image_distance_examples(a, f, b):
    assert image_distance(a, f) == pytest.approx(b, rel=1e-12)


def test_object_at_focus_rejected():
    with pytest.raises(ValueError, match="infinity"):
        image_distance(0.5, 0.5)


@pytest.mark.parametrize("a, b, m", [(1.0, 1.0, -1.0), (1.0, 2.0, -2.0), (1.5, 0.75, -0.5)])
def test_magnification_examples(a, b, m):
    assert magnification(a, b) == pytest.approx(m)


def test_magnification_needs_positive_distances():
    with pytest.raises(ValueError):
        magnification(-1.0, 1.0)


@settings(max_examples=200)
@given(st.floats(0.05, 5.0), st.floats(0.05, 2.0))
def test_image_distance_is_an_involution(a, f):
    if abs(a - f) < 1e-3 * f:
        return
    b = image_distance(a, f)
    assert image_distance(b, f) == pytest.approx(a, rel=1e-12)


@settings(max_examples=50)
@given(st.sampled_from(["rect", "gaussian"]), st.floats(1e-6, 5e-4), st.floats(-1e-4, 1e-4))
def test_aperture_never_increases_magnitude(kind, size, center):
    g = Grid1D(256, 2e-6)
    rng = np.random.default_rng(0)
    f = ComplexField1D(g, rng.normal(size=256) + 1j * rng.normal(size=256), LAM)
    ap = ApertureProfile.rect(size) if kind == "rect" else ApertureProfile.gaussian(size)
    out = apply_aperture(f, ap, center)
    assert np.all(np.abs(out.amplitude) <= np.abs(f.amplitude) + 1e-15)
