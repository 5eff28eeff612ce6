"""Unfolded Kim-Shih optical train and conditional intensity distributions.

Planes along the optical axis, in order: slit A, central lens, source
(pump-region aperture), slit B (image plane) and the D2 scan plane.
Conditioning on a detection behind slit A is modelled as an incoherent
ensemble of point emitters spread uniformly across slit A.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .conditional import TwoPhotonField
from .elements import ApertureProfile, LensSpec
from .field import (
    ComplexField1D,
    Grid1D,
    edge_taper,
    point_source,
    transfer_function,
)

__all__ = [
    "PlaneTag",
    "ExperimentConfig",
    "IntensityProfile",
    "propagate_train",
    "point_field",
    "point_spread_function",
    "simulate_coincidence",
    "simulate_coherent_conditioned",
    "two_photon_source_state",
]


class PlaneTag(enum.IntEnum):
    SLIT_A = 0
    LENS = 1
    SOURCE = 2
    SLIT_B = 3
    D2 = 4

    @property
    def label(self) -> str:
        return {0: "slitA", 1: "lens", 2: "source", 3: "slitB", 4: "D2"}[int(self)]

    @classmethod
    def parse(cls, text: str) -> "PlaneTag":
        for tag in cls:
            if text in (tag.label, tag.name, tag.name.lower()):
                return tag
        raise ValueError(f"unknown plane {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Geometry of the unfolded experiment, SI units throughout.

    ``source=None`` removes the pump-region aperture (ideal point-correlated
    source). ``source_to_image`` is the ``D`` of the blur estimate.
    """

    wavelength: float = 702.2e-9
    focal_length: float = 0.5
    d_A_lens: float = 1.0
    d_lens_source: float = 0.255
    d_source_B: float = 0.745
    d_B_D2: float = 0.5
    slit_A_width: float = 0.16e-3
    slit_B: ApertureProfile = dataclasses.field(
        default_factory=lambda: ApertureProfile.rect(0.16e-3)
    )
    source: ApertureProfile | None = dataclasses.field(
        default_factory=lambda: ApertureProfile.rect(3e-3)
    )
    n_source_points: int = 64
    grid_width: float = 40e-3
    grid_n_samples: int = 32768
    point_model: str = "bandlimited"
    point_half_angle: float = 14e-3
    point_taper_angle: float = 4e-3
    band_limit: bool = True
    edge_taper: bool = False

    def __post_init__(self):
        for name in ("wavelength", "focal_length", "d_A_lens", "d_lens_source",
                     "d_source_B", "d_B_D2", "slit_A_width", "grid_width"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive, got {value}")
        if int(self.n_source_points) != self.n_source_points or self.n_source_points < 1:
            raise ValueError(f"n_source_points must be >= 1, got {self.n_source_points}")
        if self.point_model not in ("bandlimited", "sample", "gaussian"):
            raise ValueError(f"unknown point model {self.point_model!r}")
        self.grid  # validates n_samples

    @property
    def grid(self) -> Grid1D:
        return Grid1D.from_window(self.grid_width, self.grid_n_samples)

    @property
    def source_to_image(self) -> float:
        return self.d_source_B

    @property
    def lens_to_image(self) -> float:
        return self.d_lens_source + self.d_source_B

    def positions(self) -> dict[PlaneTag, float]:
        z = np.cumsum([0.0, self.d_A_lens, self.d_lens_source, self.d_source_B, self.d_B_D2])
        return {tag: float(z[tag]) for tag in PlaneTag}

    def with_(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def case_i(self, width: float | None = None) -> "ExperimentConfig":
        """Slit B narrowed to ``width`` (default: slit A's width)."""
        return self.with_(slit_B=ApertureProfile.rect(width or self.slit_A_width))

    def case_ii(self) -> "ExperimentConfig":
        return self.with_(slit_B=ApertureProfile.open())


@dataclass(frozen=True, eq=False)
class IntensityProfile:
    grid: Grid1D
    intensity: np.ndarray
    normalization: str
    plane: PlaneTag

    def __post_init__(self):
        values = np.array(self.intensity, dtype=float)
        if values.shape != (self.grid.n_samples,):
            raise ValueError("intensity length does not match the grid")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("intensity must be finite and non-negative")
        if self.normalization == "peak":
            ok = abs(values.max() - 1) <= 1e-9
        elif self.normalization == "unit-area":
            ok = abs(values.sum() * self.grid.dx - 1) <= 1e-9
        else:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if not ok:
            raise ValueError(f"intensity does not satisfy {self.normalization} normalization")
        values.setflags(write=False)
        object.__setattr__(self, "intensity", values)

    @classmethod
    def normalized(cls, grid, intensity, normalization, plane) -> "IntensityProfile":
        intensity = np.asarray(intensity, dtype=float)
        if normalization == "peak":
            scale = intensity.max()
        else:
            scale = intensity.sum() * grid.dx
        if not scale > 0:
            raise ValueError("cannot normalise an all-zero intensity profile")
        return cls(grid, intensity / scale, normalization, plane)

    @property
    def coords(self) -> np.ndarray:
        return self.grid.y

    @property
    def values(self) -> np.ndarray:
        return self.intensity


def _element(config: ExperimentConfig, plane: PlaneTag, grid: Grid1D, k: float):
    """Pointwise multiplier of the element at ``plane``, or None for identity."""
    if plane is PlaneTag.SLIT_A:
        return ApertureProfile.rect(config.slit_A_width).transmission(grid)
    if plane is PlaneTag.LENS:
        lens = LensSpec(config.focal_length)
        return np.exp(-1j * k * grid.y**2 / (2 * lens.focal_length))
    if plane is PlaneTag.SOURCE:
        if config.source is None or config.source.kind == "open":
            return None
        return config.source.transmission(grid)
    if plane is PlaneTag.SLIT_B:
        if config.slit_B.kind == "open":
            return None
        return config.slit_B.transmission(grid)
    return None


def _taper_mask(grid: Grid1D, fraction: float = 0.1) -> np.ndarray:
    ones = ComplexField1D(grid, np.ones(grid.n_samples), 1.0)
    return edge_taper(ones, fraction).amplitude.real


def _propagate_rows(config, amplitudes, grid, wavelength, start: PlaneTag, stop: PlaneTag):
    """Carry a ``(rows, n)`` stack of amplitudes from ``start`` to ``stop``."""
    z = config.positions()
    k = 2 * np.pi / wavelength
    taper = _taper_mask(grid) if config.edge_taper else None
    out = amplitudes
    for plane in range(start + 1, stop + 1):
        plane = PlaneTag(plane)
        distance = z[plane] - z[PlaneTag(plane - 1)]
        transfer = transfer_function(grid, wavelength, distance, config.band_limit)
        out = np.fft.ifft(np.fft.fft(out, axis=-1) * transfer, axis=-1)
        if taper is not None:
            out = out * taper
        if plane != stop:
            mult = _element(config, plane, grid, k)
            if mult is not None:
                out = out * mult
    return out


def propagate_train(
    config: ExperimentConfig, initial: ComplexField1D, start: PlaneTag, stop: PlaneTag
) -> ComplexField1D:
    """Free propagation between consecutive planes with intermediate elements applied.

    The elements sitting on ``start`` and ``stop`` themselves are not
    applied; compose them explicitly if wanted.
    """
    start, stop = PlaneTag(start), PlaneTag(stop)
    if stop < start:
        raise ValueError(f"cannot propagate backwards from {start.label} to {stop.label}")
    if stop == start:
        return initial
    out = _propagate_rows(config, initial.amplitude[None, :], initial.grid,
                          initial.wavelength, start, stop)
    return initial.replace(amplitude=out[0])


def point_field(config: ExperimentConfig, position: float) -> ComplexField1D:
    """Unit-power point emitter in the slit A plane."""
    return point_source(
        config.grid,
        config.wavelength,
        position,
        model=config.point_model,
        half_angle=config.point_half_angle,
        taper_angle=config.point_taper_angle,
    )


def point_spread_function(config: ExperimentConfig, point: float = 0.0) -> IntensityProfile:
    """Peak-normalised image-plane intensity of one point at ``point`` in slit A.

    Slit B is not applied.
    """
    if config.source is None:
        raise ValueError("point-spread function needs a source aperture; source is absent")
    f = propagate_train(config, point_field(config, point), PlaneTag.SLIT_A, PlaneTag.SLIT_B)
    return IntensityProfile.normalized(f.grid, f.intensity, "peak", PlaneTag.SLIT_B)


def source_points(config: ExperimentConfig) -> np.ndarray:
    """Cell-centred emitter positions spanning slit A uniformly."""
    n = config.n_source_points
    w = config.slit_A_width
    return (np.arange(n) + 0.5) / n * w - 0.5 * w


def _coherent_rows(config: ExperimentConfig, positions, stop: PlaneTag) -> np.ndarray:
    rows = np.stack([point_field(config, p).amplitude for p in positions])
    out = _propagate_rows(config, rows, config.grid, config.wavelength, PlaneTag.SLIT_A,
                          PlaneTag.SLIT_B)
    if stop == PlaneTag.SLIT_B:
        return out
    mult = _element(config, PlaneTag.SLIT_B, config.grid, 2 * np.pi / config.wavelength)
    if mult is not None:
        out = out * mult
    return _propagate_rows(config, out, config.grid, config.wavelength, PlaneTag.SLIT_B, stop)


# emitters per propagation batch; bounds memory at ~4 copies of 16 x n complex rows
_BATCH = 16


def simulate_coincidence(config: ExperimentConfig) -> IntensityProfile:
    """Unit-area D2 intensity conditioned on a detection anywhere behind slit A.

    Every emitter across slit A is propagated coherently through slit B to
    D2 and the intensities (not amplitudes) are summed in emitter order.
    """
    positions = source_points(config)
    total = np.zeros(config.grid.n_samples)
    for start in range(0, positions.size, _BATCH):
        rows = _coherent_rows(config, positions[start:start + _BATCH], PlaneTag.D2)
        total += kernels.accumulate_intensity(np.ascontiguousarray(rows))
    return IntensityProfile.normalized(config.grid, total, "unit-area", PlaneTag.D2)


def simulate_coherent_conditioned(
    config: ExperimentConfig, d1_point: float, plane: PlaneTag = PlaneTag.D2
) -> IntensityProfile:
    """Unit-area intensity for a single coherent emitter at ``d1_point`` in slit A.

    ``plane`` may be ``SLIT_B`` (before slit B acts) or ``D2``.
    """
    if abs(d1_point) >= 0.5 * config.slit_A_width:
        raise ValueError(
            f"d1_point {d1_point:.3g} m lies outside slit A (half-width "
            f"{0.5 * config.slit_A_width:.3g} m)"
        )
    if plane not in (PlaneTag.SLIT_B, PlaneTag.D2):
        raise ValueError("plane must be slitB or D2")
    row = _coherent_rows(config, [d1_point], plane)[0]
    return IntensityProfile.normalized(config.grid, np.abs(row) ** 2, "unit-area", plane)


def two_photon_source_state(
    source_width: float,
    correlation_width: float,
    grid_y1: Grid1D,
    grid_y2: Grid1D | None = None,
    *,
    wavelength: float = 702.2e-9,
    source_profile: str = "rect",
) -> TwoPhotonField:
    """Finite-correlation version of the anticorrelated pair state.

    ``psi(y1, y2) = S((y1 - y2)/2) * exp(-(y1 + y2)**2 / (4 b**2))`` with
    ``b = correlation_width`` (RMS of ``|g|**2`` in ``y1 + y2``). ``S`` is a
    hard-edged band of full width ``source_width`` for ``rect``; for
    ``gaussian`` it is ``exp(-v**2/(4 a**2))`` with ``a = source_width``.
    """
    grid_y2 = grid_y1 if grid_y2 is None else grid_y2
    if not (source_width > 0 and correlation_width > 0):
        raise ValueError("source and correlation widths must be positive")
    if correlation_width >= source_width:
        raise ValueError("correlation width must be much smaller than the source width")
    pitch = max(grid_y1.dx, grid_y2.dx)
    if correlation_width < 4 * pitch * (1 - 1e-9):
        raise ValueError(
            f"grid too coarse: correlation width {correlation_width:.3g} m spans fewer "
            f"than 4 samples of {pitch:.3g} m"
        )
    y1 = grid_y1.y[:, None]
    y2 = grid_y2.y[None, :]
    v = 0.5 * (y1 - y2)
    u = y1 + y2
    if source_profile == "rect":
        band = (np.abs(v) < 0.5 * source_width).astype(float)
    elif source_profile == "gaussian":
        band = np.exp(-(v**2) / (4 * source_width**2))
    else:
        raise ValueError(f"unknown source profile {source_profile!r}")
    amp = band * np.exp(-(u**2) / (4 * correlation_width**2))
    norm = np.sqrt(np.sum(amp**2) * grid_y1.dx * grid_y2.dx)
    return TwoPhotonField(grid_y1, grid_y2, amp / norm, wavelength)
