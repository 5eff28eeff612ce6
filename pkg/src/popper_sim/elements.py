"""Thin lenses, apertures and Gaussian imaging relations."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import ComplexField1D, Grid1D

__all__ = [
    "ApertureProfile",
    "LensSpec",
    "apply_lens",
    "apply_aperture",
    "image_distance",
    "magnification",
]

_KINDS = ("rect", "gaussian", "open", "tabulated")


@dataclass(frozen=True, eq=False)
class ApertureProfile:
    """Amplitude transmission profile, built through the classmethods.

    ``rect`` is a hard-edged slit: a sample transmits only if its centre is
    strictly inside. ``gaussian`` transmits ``exp(-y**2 / (4 rms**2))`` so
    that a uniform beam leaves with an intensity profile of RMS width
    ``rms``. ``tabulated`` carries its own grid and must be applied to
    fields on that grid.
    """

    kind: str
    width: float | None = None
    rms: float | None = None
    samples: np.ndarray | None = None
    grid: Grid1D | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown aperture kind {self.kind!r}")
        if self.kind == "rect" and not (self.width is not None and self.width > 0):
            raise ValueError(f"rect aperture width must be > 0, got {self.width}")
        if self.kind == "gaussian" and not (self.rms is not None and self.rms > 0):
            raise ValueError(f"gaussian aperture rms must be > 0, got {self.rms}")
        if self.kind == "tabulated":
            if self.samples is None or self.grid is None:
                raise ValueError("tabulated aperture needs samples and grid")
            vals = np.array(self.samples, dtype=float)
            if vals.shape != (self.grid.n_samples,):
                raise ValueError("tabulated samples do not match their grid")
            if np.any(vals < 0) or np.any(vals > 1) or not np.all(np.isfinite(vals)):
                raise ValueError("tabulated transmission must lie in [0, 1]")
            vals.setflags(write=False)
            object.__setattr__(self, "samples", vals)

    @classmethod
    def rect(cls, width: float) -> "ApertureProfile":
        return cls("rect", width=float(width))

    @classmethod
    def gaussian(cls, rms: float) -> "ApertureProfile":
        return cls("gaussian", rms=float(rms))

    @classmethod
    def open(cls) -> "ApertureProfile":
        return cls("open")

    @classmethod
    def tabulated(cls, samples, grid: Grid1D) -> "ApertureProfile":
        return cls("tabulated", samples=samples, grid=grid)

    def transmission(self, grid: Grid1D, center: float = 0.0) -> np.ndarray:
        y = grid.y - center
        if self.kind == "open":
            return np.ones(grid.n_samples)
        if self.kind == "rect":
            return (np.abs(y) < 0.5 * self.width).astype(float)
        if self.kind == "gaussian":
            return np.exp(-(y**2) / (4 * self.rms**2))
        if grid != self.grid:
            raise ValueError(
                f"tabulated aperture defined on {self.grid}, field is on {grid}"
            )
        if center != 0.0:
            shift = center / grid.dx
            if shift != round(shift):
                raise ValueError("tabulated aperture can only be shifted by whole samples")
            return np.roll(self.samples, int(round(shift)))
        return np.asarray(self.samples)

    def describe(self) -> str:
        if self.kind == "rect":
            return f"rect({self.width * 1e3:g} mm)"
        if self.kind == "gaussian":
            return f"gaussian(rms {self.rms * 1e3:g} mm)"
        return self.kind


@dataclass(frozen=True)
class LensSpec:
    focal_length: float

    def __post_init__(self):
        if self.focal_length == 0 or not math.isfinite(self.focal_length):
            raise ValueError("focal length must be finite and non-zero")


def apply_lens(f: ComplexField1D, lens: LensSpec) -> ComplexField1D:
    """Multiply by the paraxial thin-lens phase ``exp(-1j*k*y**2/(2f))``."""
    phase = np.exp(-1j * f.k * f.grid.y**2 / (2 * lens.focal_length))
    return f.replace(amplitude=f.amplitude * phase)


def apply_aperture(
    f: ComplexField1D, aperture: ApertureProfile, center: float = 0.0
) -> ComplexField1D:
    if aperture.kind == "open":
        return f
    return f.replace(amplitude=f.amplitude * aperture.transmission(f.grid, center))


def image_distance(object_distance: float, f: float) -> float:
    """Image distance ``b`` from ``1/a + 1/b = 1/f``."""
    if object_distance == f:
        raise ValueError("object at the focal plane images to infinity")
    return 1.0 / (1.0 / f - 1.0 / object_distance)


def magnification(a: float, b: float) -> float:
    """Lateral magnification ``-b/a``; negative means inverted."""
    if not (a > 0 and b > 0):
        raise ValueError("object and image distances must be positive")
    return -b / a
