"""Width metrics, analytic blur/momentum estimates and uncertainty products.

Width functions accept any profile exposing ``coords`` and ``values``
(``IntensityProfile`` or ``MomentumProfile``) on a uniform axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PLANCK",
    "HBAR",
    "WidthReport",
    "UncertaintyReport",
    "CaseRatio",
    "width_between_first_minima",
    "fwhm",
    "rms_width",
    "width_report",
    "predicted_blur_width",
    "predicted_momentum_spread",
    "uncertainty_product",
    "case_ratio_report",
]

PLANCK = 6.62607015e-34
HBAR = PLANCK / (2 * math.pi)

WIDTH_METHODS = ("first-minima", "fwhm", "rms")


@dataclass(frozen=True)
class WidthReport:
    first_minima_full_width: float | None
    fwhm: float
    rms_width: float
    rms_window: tuple[float, float]
    method_notes: str


@dataclass(frozen=True)
class UncertaintyReport:
    delta_y: float
    delta_p_over_hbar: float
    product_over_h: float
    bound_satisfied: bool
    method: str
    reliable: bool = True
    method_notes: str = ""


@dataclass(frozen=True)
class CaseRatio:
    ratio: float
    method: str
    width_i: float
    width_ii: float

    def __float__(self):
        return self.ratio


def _xy(profile):
    x = np.asarray(profile.coords, dtype=float)
    v = np.asarray(profile.values, dtype=float)
    if x.shape != v.shape or x.size < 3:
        raise ValueError("profile needs at least three samples with matching coordinates")
    if not np.any(v > 0):
        raise ValueError("profile is identically zero")
    return x, v


def _peak_index(x, v) -> int:
    """Global maximum; exact ties go to the sample nearest the origin."""
    candidates = np.flatnonzero(v == v.max())
    return int(candidates[np.argmin(np.abs(x[candidates]))])


def _parabolic_offset(a, b, c) -> float:
    denom = a - 2 * b + c
    return 0.0 if denom == 0 else 0.5 * (a - c) / denom


def width_between_first_minima(profile) -> float | None:
    """Distance between the first local minima flanking the global peak.

    Minima are sought on a 3-sample moving average (a minimum is strictly
    below both neighbours) and refined by parabolic interpolation. Returns
    ``None`` when either side has no minimum inside the window.
    """
    x, v = _xy(profile)
    smooth = np.convolve(v, np.ones(3) / 3, mode="same")
    peak = _peak_index(x, v)
    dx = x[1] - x[0]
    edges = []
    for step in (-1, 1):
        j = peak + step
        found = None
        while 1 <= j <= v.size - 2:
            if smooth[j] < smooth[j - 1] and smooth[j] < smooth[j + 1]:
                found = x[j] + _parabolic_offset(smooth[j - 1], smooth[j], smooth[j + 1]) * dx
                break
            j += step
        if found is None:
            return None
        edges.append(found)
    return float(edges[1] - edges[0])


def fwhm(profile) -> float:
    """Full width at half maximum between the outermost half-maximum crossings.

    Using the outermost crossings keeps rippled flat-top profiles (Fresnel
    edge ringing, double-humped defocused images) from reporting the width
    of a single ripple. Crossings are linearly interpolated.
    """
    x, v = _xy(profile)
    half = 0.5 * v[_peak_index(x, v)]
    above = np.flatnonzero(v > half)
    lo, hi = int(above[0]), int(above[-1])
    if lo == 0 or hi == v.size - 1:
        raise ValueError("profile never falls below half maximum inside the window; "
                         "window too small")
    left = x[lo - 1] + (half - v[lo - 1]) / (v[lo] - v[lo - 1]) * (x[lo] - x[lo - 1])
    right = x[hi] + (v[hi] - half) / (v[hi] - v[hi + 1]) * (x[hi + 1] - x[hi])
    return float(right - left)


def rms_width(profile, window: tuple[float, float] | None = None) -> float:
    """Standard deviation of the profile restricted to ``window`` (default: all samples)."""
    x, v = _xy(profile)
    if window is not None:
        keep = (x >= window[0]) & (x <= window[1])
        x, v = x[keep], v[keep]
    w = v / v.sum()
    mean = np.sum(w * x)
    return float(np.sqrt(np.sum(w * (x - mean) ** 2)))


def _rms_reliability(profile, window=None) -> tuple[bool, float]:
    """Share of the truncated variance carried by the outermost tenth of the window."""
    x, v = _xy(profile)
    if window is not None:
        keep = (x >= window[0]) & (x <= window[1])
        x, v = x[keep], v[keep]
    w = v / v.sum()
    mean = np.sum(w * x)
    contrib = w * (x - mean) ** 2
    n_edge = max(1, x.size // 20)
    outer = contrib[:n_edge].sum() + contrib[-n_edge:].sum()
    share = float(outer / contrib.sum()) if contrib.sum() > 0 else 0.0
    return share <= 0.5, share


def width_report(profile, rms_window: tuple[float, float] | None = None) -> WidthReport:
    x, _ = _xy(profile)
    window = rms_window or (float(x[0]), float(x[-1]))
    first = width_between_first_minima(profile)
    notes = [f"rms truncated to [{window[0]:.6g}, {window[1]:.6g}]"]
    if first is None:
        notes.append("no first minima inside window")
    reliable, share = _rms_reliability(profile, window)
    if not reliable:
        notes.append(f"rms dominated by window edges ({share:.0%} of variance)")
    return WidthReport(first, fwhm(profile), rms_width(profile, window), window, "; ".join(notes))


def predicted_blur_width(D: float, wavelength: float, s: float) -> float:
    """First-minima width ``2 D lambda / s`` of a point imaged through a source of width ``s``."""
    if not (D > 0 and wavelength > 0 and s > 0):
        raise ValueError("D, wavelength and s must all be positive")
    return 2 * D * wavelength / s


def predicted_momentum_spread(wavelength: float, s: float, D: float) -> float:
    """Transverse wavenumber spread ``(2 pi / lambda) * s / D`` for rays through a point image."""
    if not (D > 0 and wavelength > 0 and s > 0):
        raise ValueError("wavelength, s and D must all be positive")
    return 2 * math.pi / wavelength * s / D


def _width(profile, method: str) -> tuple[float | None, str]:
    if method == "first-minima":
        return width_between_first_minima(profile), ""
    if method == "fwhm":
        return fwhm(profile), ""
    if method == "rms":
        reliable, share = _rms_reliability(profile)
        note = "" if reliable else f"window edges carry {share:.0%} of the variance"
        width = rms_width(profile)
        pitch = abs(profile.coords[1] - profile.coords[0])
        if width < pitch:
            note = "narrower than one sample; unresolved by the grid"
        return width, note
    raise ValueError(f"unknown width method {method!r}; expected one of {WIDTH_METHODS}")


def uncertainty_product(
    profile_y, profile_k, width_method: str = "rms", momentum_method: str | None = None
) -> UncertaintyReport:
    """Position/momentum spread product in units of ``h``.

    ``momentum_method`` defaults to ``width_method``. ``delta_p_over_hbar`` is
    the wavenumber spread, so the product over ``h`` is ``dy * dk / (2 pi)``.
    The Heisenberg bound ``1/(4 pi)`` is meaningful only for RMS widths; for
    the other methods ``bound_satisfied`` reports the same comparison
    without that guarantee.
    """
    momentum_method = momentum_method or width_method
    dy, note_y = _width(profile_y, width_method)
    dk, note_k = _width(profile_k, momentum_method)
    if dy is None or dk is None:
        raise ValueError(f"{width_method}/{momentum_method} width not found inside the window")
    notes = []
    if width_method == "rms" or momentum_method == "rms":
        notes.append("rms widths are truncated to the sampled window; sinc^2 tails "
                     "have divergent variance")
    reliable = True
    for axis, note in (("position", note_y), ("momentum", note_k)):
        if note:
            notes.append(f"{axis}: {note}; unreliable")
            reliable = False
    product = dy * dk / (2 * math.pi)
    method = width_method if momentum_method == width_method else f"{width_method}/{momentum_method}"
    return UncertaintyReport(
        delta_y=dy,
        delta_p_over_hbar=dk,
        product_over_h=product,
        bound_satisfied=product >= 1 / (4 * math.pi) * (1 - 1e-12),
        method=method,
        reliable=reliable,
        method_notes="; ".join(notes),
    )


def case_ratio_report(profile_i, profile_ii, method: str = "auto") -> CaseRatio:
    """``width(ii) / width(i)`` measured the same way on both D2 profiles.

    ``auto`` uses first-minima widths when both profiles have them and FWHM
    otherwise. A tuple of two different methods is rejected.
    """
    if isinstance(method, tuple):
        if len(set(method)) != 1:
            raise ValueError("case ratio must compare like with like; got mixed methods "
                             f"{method}")
        method = method[0]
    if method == "auto":
        w_i = width_between_first_minima(profile_i)
        w_ii = width_between_first_minima(profile_ii)
        if w_i is not None and w_ii is not None:
            return CaseRatio(w_ii / w_i, "first-minima", w_i, w_ii)
        method = "fwhm"
    w_i, _ = _width(profile_i, method)
    w_ii, _ = _width(profile_ii, method)
    if w_i is None or w_ii is None:
        raise ValueError(f"{method} width missing on one of the profiles")
    return CaseRatio(w_ii / w_i, method, w_i, w_ii)
