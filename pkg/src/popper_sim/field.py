"""Uniform 1-D transverse grids, complex fields and free-space propagators.

All lengths are SI metres. The discrete Fourier convention is fixed: the
forward transform uses ``exp(-1j * k_y * y)``, the wavenumber grid has
spacing ``2*pi / (n * dx)`` and both axes are zero-centred, so sample ``i``
sits at ``y = (i - n/2) * dx`` and ``k_y = (i - n/2) * dk``.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from ._backend import kernels

__all__ = [
    "Grid1D",
    "ComplexField1D",
    "MomentumProfile",
    "SamplingWarning",
    "make_field",
    "point_source",
    "spectrum",
    "propagate_angular_spectrum",
    "propagate_fresnel",
    "propagate_direct_oracle",
    "momentum_distribution",
    "edge_taper",
    "transfer_function",
    "fresnel_output_grid",
    "DIRECT_ORACLE_MAX_SAMPLES",
]

DIRECT_ORACLE_MAX_SAMPLES = 4096


class SamplingWarning(UserWarning):
    """Grid too coarse or too large for the requested operation."""


@dataclass(frozen=True)
class Grid1D:
    """Centred uniform grid of ``n_samples`` points with pitch ``dx``."""

    n_samples: int
    dx: float

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 2 or self.n_samples % 2:
            raise ValueError(f"n_samples must be an even integer >= 2, got {self.n_samples}")
        if not (math.isfinite(self.dx) and self.dx > 0):
            raise ValueError(f"dx must be finite and positive, got {self.dx}")
        object.__setattr__(self, "n_samples", int(self.n_samples))
        object.__setattr__(self, "dx", float(self.dx))

    @classmethod
    def from_window(cls, width: float, n_samples: int) -> "Grid1D":
        return cls(n_samples, width / n_samples)

    @property
    def width(self) -> float:
        return self.n_samples * self.dx

    @property
    def y(self) -> np.ndarray:
        return (np.arange(self.n_samples) - self.n_samples // 2) * self.dx

    @property
    def dk(self) -> float:
        return 2 * np.pi / (self.n_samples * self.dx)

    @property
    def k(self) -> np.ndarray:
        return (np.arange(self.n_samples) - self.n_samples // 2) * self.dk

    def index_of(self, y: float) -> int:
        """Nearest sample index to transverse position ``y``."""
        return int(round(y / self.dx)) + self.n_samples // 2


@dataclass(frozen=True, eq=False)
class ComplexField1D:
    """Sampled complex transverse amplitude at one wavelength.

    ``notes`` carries sampling-quality remarks accumulated by the operations
    that produced the field.
    """

    grid: Grid1D
    amplitude: np.ndarray
    wavelength: float
    notes: tuple[str, ...] = dc_field(default=())

    def __post_init__(self):
        amp = np.array(self.amplitude, dtype=np.complex128)
        if amp.shape != (self.grid.n_samples,):
            raise ValueError(
                f"amplitude has shape {amp.shape}, expected ({self.grid.n_samples},)"
            )
        if not np.all(np.isfinite(amp)):
            bad = int(np.flatnonzero(~np.isfinite(amp))[0])
            raise ValueError(f"non-finite amplitude at sample {bad}")
        if not (math.isfinite(self.wavelength) and self.wavelength > 0):
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitude", amp)
        object.__setattr__(self, "wavelength", float(self.wavelength))

    @property
    def k(self) -> float:
        return 2 * np.pi / self.wavelength

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2

    @property
    def power(self) -> float:
        return float(np.sum(self.intensity) * self.grid.dx)

    def replace(self, amplitude=None, grid=None, notes=None) -> "ComplexField1D":
        return ComplexField1D(
            self.grid if grid is None else grid,
            self.amplitude if amplitude is None else amplitude,
            self.wavelength,
            self.notes if notes is None else notes,
        )


@dataclass(frozen=True, eq=False)
class MomentumProfile:
    """Transverse-wavenumber density normalised so ``sum(density) * dk == 1``.

    ``power`` is the field power recovered from the spectrum via Parseval.
    """

    k_samples: np.ndarray
    density: np.ndarray
    power: float

    @property
    def dk(self) -> float:
        return float(self.k_samples[1] - self.k_samples[0])

    @property
    def coords(self) -> np.ndarray:
        return self.k_samples

    @property
    def values(self) -> np.ndarray:
        return self.density


def make_field(grid: Grid1D, wavelength: float, profile: Callable) -> ComplexField1D:
    """Sample ``profile(y)`` on ``grid``; no normalisation is applied.

    ``profile`` is called once with the full coordinate array and may return
    a scalar (broadcast) or an array of matching length.
    """
    y = grid.y
    values = np.broadcast_to(np.asarray(profile(y), dtype=np.complex128), y.shape)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"profile is not finite at sample {i} (y = {y[i]:.6g} m)")
    return ComplexField1D(grid, values.copy(), wavelength)


def _raised_cosine(x: np.ndarray, start: float, stop: float) -> np.ndarray:
    """1 below ``start``, 0 above ``stop``, half-cosine roll-off in between."""
    x = np.asarray(x, dtype=float)
    if stop <= start:
        return (x <= start).astype(float)
    t = np.clip((x - start) / (stop - start), 0.0, 1.0)
    return 0.5 * (1 + np.cos(np.pi * t))


def point_source(
    grid: Grid1D,
    wavelength: float,
    position: float = 0.0,
    *,
    model: str = "bandlimited",
    half_angle: float = 14e-3,
    taper_angle: float = 4e-3,
) -> ComplexField1D:
    """Unit-power approximation of a point emitter at ``position``.

    ``bandlimited`` builds the emitter in the spectral domain: flat angular
    spectrum up to ``half_angle`` with a raised-cosine roll-off over the next
    ``taper_angle``, translated by a linear spectral phase so off-grid
    positions are exact. ``sample`` excites the single nearest sample and
    ``gaussian`` a Gaussian of one-sample RMS; both radiate into every
    angle the grid supports and alias on windows smaller than the spread.
    """
    if model == "bandlimited":
        if half_angle <= 0 or taper_angle < 0:
            raise ValueError("half_angle must be positive and taper_angle non-negative")
        k0 = 2 * np.pi / wavelength
        ky = grid.k
        envelope = _raised_cosine(np.abs(ky), k0 * math.sin(half_angle),
                                  k0 * math.sin(half_angle + taper_angle))
        spec = envelope * np.exp(-1j * ky * position)
        amp = np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(spec)))
    elif model == "sample":
        amp = np.zeros(grid.n_samples, dtype=np.complex128)
        i = grid.index_of(position)
        if not 0 <= i < grid.n_samples:
            raise ValueError(f"position {position} m lies outside the grid")
        amp[i] = 1.0
    elif model == "gaussian":
        amp = np.exp(-((grid.y - position) ** 2) / (4 * grid.dx**2)).astype(np.complex128)
    else:
        raise ValueError(f"unknown point-source model {model!r}")
    power = np.sum(np.abs(amp) ** 2) * grid.dx
    return ComplexField1D(grid, amp / math.sqrt(power), wavelength)


def spectrum(f: ComplexField1D) -> tuple[np.ndarray, np.ndarray]:
    """Centred continuous-normalised Fourier transform ``sum a(y) exp(-i k y) dx``."""
    a = np.fft.ifftshift(f.amplitude)
    spec = np.fft.fftshift(np.fft.fft(a)) * f.grid.dx
    return f.grid.k, spec


def _sampling_notes(f: ComplexField1D) -> tuple[str, ...]:
    if f.grid.dx >= f.wavelength / 2:
        note = (f"dx = {f.grid.dx:.3g} m >= lambda/2 = {f.wavelength / 2:.3g} m: "
                "high-angle components alias")
        if note not in f.notes:
            return f.notes + (note,)
    return f.notes


def propagate_angular_spectrum(
    f: ComplexField1D, distance: float, *, band_limit: bool = False
) -> ComplexField1D:
    """Advance ``f`` by ``distance`` with the exact scalar transfer function.

    Each plane-wave component is multiplied by ``exp(1j*z*sqrt(k**2 - k_y**2))``;
    the branch of the square root makes evanescent components decay.

    With ``band_limit`` the transfer function is rolled off (raised cosine
    from 80 % to 100 %) for directions whose lateral walk over ``distance``
    exceeds half the window, acting like an absorbing boundary against
    periodic wrap-around. This sacrifices exact power conservation.
    """
    if not distance >= 0:
        raise ValueError(f"distance must be >= 0, got {distance}")
    notes = _sampling_notes(f)
    if distance == 0:
        return f.replace(notes=notes)
    transfer = transfer_function(f.grid, f.wavelength, distance, band_limit)
    out = np.fft.ifft(np.fft.fft(f.amplitude) * transfer)
    return f.replace(amplitude=out, notes=notes)


@functools.lru_cache(maxsize=64)
def transfer_function(
    grid: Grid1D, wavelength: float, distance: float, band_limit: bool = False
) -> np.ndarray:
    """Angular-spectrum transfer function in unshifted FFT order (read-only, cached)."""
    k0 = 2 * np.pi / wavelength
    ky = 2 * np.pi * np.fft.fftfreq(grid.n_samples, grid.dx)
    kz = np.sqrt((k0**2 - ky**2).astype(np.complex128))
    transfer = np.exp(1j * distance * kz)
    if band_limit:
        propagating = np.abs(ky) < k0
        walk = np.full(ky.shape, np.inf)
        walk[propagating] = distance * np.abs(ky[propagating]) / kz[propagating].real
        half = 0.5 * grid.width
        transfer = transfer * _raised_cosine(walk, 0.8 * half, half)
    transfer.setflags(write=False)
    return transfer


def fresnel_output_grid(f: ComplexField1D, distance: float) -> Grid1D:
    """Grid produced by the single-transform Fresnel propagator."""
    return Grid1D(f.grid.n_samples, f.wavelength * distance / (f.grid.n_samples * f.grid.dx))


def propagate_fresnel(f: ComplexField1D, distance: float) -> ComplexField1D:
    """Paraxial single-FFT Fresnel propagation.

    Implements ``u(x) = exp(ikz)/sqrt(i*lambda*z) * exp(ik x^2/2z) *
    sum u(s) exp(ik s^2/2z) exp(-ik x s/z) ds``. The output pitch is
    ``lambda*z/(n*dx)``; on a grid where that equals ``dx`` the input and
    output grids coincide.
    """
    if not distance > 0:
        raise ValueError(f"Fresnel propagation needs distance > 0, got {distance}")
    notes = _sampling_notes(f)
    k0 = f.k
    out_grid = fresnel_output_grid(f, distance)
    y = f.grid.y
    x = out_grid.y
    chirped = f.amplitude * np.exp(1j * k0 * y**2 / (2 * distance))
    # exp(-ik x s/z) with x on out_grid is exactly the centred DFT kernel
    transformed = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(chirped))) * f.grid.dx
    prefactor = np.exp(1j * k0 * distance) / np.sqrt(1j * f.wavelength * distance)
    out = prefactor * np.exp(1j * k0 * x**2 / (2 * distance)) * transformed
    return ComplexField1D(out_grid, out, f.wavelength, notes)


def propagate_direct_oracle(
    f: ComplexField1D, distance: float, output_grid: Grid1D | None = None
) -> ComplexField1D:
    """Brute-force trapezoid quadrature of the 1-D Fresnel diffraction integral.

    O(n_in * n_out); slow on purpose. Evaluated on ``output_grid`` (defaults
    to the input grid).
    """
    if not distance > 0:
        raise ValueError(f"distance must be > 0, got {distance}")
    out_grid = f.grid if output_grid is None else output_grid
    if max(f.grid.n_samples, out_grid.n_samples) > DIRECT_ORACLE_MAX_SAMPLES:
        warnings.warn(
            f"direct quadrature on {f.grid.n_samples} x {out_grid.n_samples} samples "
            "is O(n^2) and will be slow",
            SamplingWarning,
            stacklevel=2,
        )
    weights = np.full(f.grid.n_samples, f.grid.dx)
    weights[0] = weights[-1] = 0.5 * f.grid.dx
    total = kernels.fresnel_direct(
        np.ascontiguousarray(f.amplitude), weights, f.grid.y, out_grid.y, f.k, float(distance)
    )
    prefactor = np.exp(1j * f.k * distance) / np.sqrt(1j * f.wavelength * distance)
    return ComplexField1D(out_grid, prefactor * total, f.wavelength, f.notes)


def momentum_distribution(f: ComplexField1D) -> MomentumProfile:
    """Normalised ``|FT(amplitude)|**2`` over the centred k_y grid."""
    if f.power <= 0:
        raise ValueError("momentum distribution of a zero-power field is undefined")
    k, spec = spectrum(f)
    dens = np.abs(spec) ** 2
    total = np.sum(dens) * f.grid.dk
    return MomentumProfile(k, dens / total, float(total / (2 * np.pi)))


def edge_taper(f: ComplexField1D, fraction: float = 0.1) -> ComplexField1D:
    """Raised-cosine roll-off over ``fraction`` of the window at each edge."""
    if not 0 < fraction < 0.5:
        raise ValueError("taper fraction must lie in (0, 0.5)")
    half = 0.5 * f.grid.width
    mask = _raised_cosine(np.abs(f.grid.y), half * (1 - 2 * fraction), half)
    return f.replace(amplitude=f.amplitude * mask)
