"""``popper run``: configuration parsing, scenario orchestration and output files.

Configuration files are plain ``key = value`` lines (``#`` starts a comment).
Lengths carry their unit in the key suffix (``_mm``, ``_nm``, ``_mrad``).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import analysis, conditional
from .elements import ApertureProfile
from .experiment import (
    ExperimentConfig,
    IntensityProfile,
    PlaneTag,
    point_field,
    point_spread_function,
    propagate_train,
    simulate_coincidence,
    two_photon_source_state,
)
from .field import (
    ComplexField1D,
    Grid1D,
    momentum_distribution,
    propagate_angular_spectrum,
)

SCENARIOS = ("kim-shih", "psf", "single-slit", "conditional-tests", "phase-matching")
EMIT_CHOICES = ("csv", "json")

# reported measurements and acceptance bands
MEASURED_CASE_I_MM = 4.4
MEASURED_CASE_II_MM = 1.6
CASE_I_TOLERANCE = 0.10
CASE_II_BAND_MM = (1.2, 2.4)
CASE_RATIO_MAX = 0.55
CASE_RATIO_INVERSE_MIN = 2.0
FLAT_HALF_RANGE_MM = 5.0
FLAT_VARIATION_MAX = 0.20
PSF_RATIO_BAND = (0.95, 1.05)
SINGLE_SLIT_TOLERANCE = 0.02
PHASE_MATCHING_SOURCES_MM = (1.0, 3.0, 10.0)
PHASE_MATCHING_CORRELATION_SAMPLES = (4, 8, 16)


class ConfigError(ValueError):
    """Invalid configuration key or value."""


# key -> (ExperimentConfig attribute, scale to SI); None attribute = special handling
_LENGTH_KEYS = {
    "wavelength_nm": ("wavelength", 1e-9),
    "focal_length_mm": ("focal_length", 1e-3),
    "d_a_lens_mm": ("d_A_lens", 1e-3),
    "d_lens_source_mm": ("d_lens_source", 1e-3),
    "d_source_b_mm": ("d_source_B", 1e-3),
    "d_b_d2_mm": ("d_B_D2", 1e-3),
    "slit_a_width_mm": ("slit_A_width", 1e-3),
    "grid_window_mm": ("grid_width", 1e-3),
    "point_half_angle_mrad": ("point_half_angle", 1e-3),
    "point_taper_mrad": ("point_taper_angle", 1e-3),
}
_SPECIAL_KEYS = {
    "slit_b", "slit_b_width_mm", "source", "source_width_mm", "n_source_points",
    "grid_n_samples", "point_model", "band_limit", "edge_taper", "emit", "seed",
}
KNOWN_KEYS = frozenset(_LENGTH_KEYS) | _SPECIAL_KEYS


@dataclass
class RunConfig:
    scenario: str
    experiment: ExperimentConfig = dc_field(default_factory=ExperimentConfig)
    output_dir: Path = Path("popper-out")
    seed: int = 0
    emit: tuple[str, ...] = EMIT_CHOICES


@dataclass
class SummaryRecord:
    scenario: str
    values: dict
    flags: dict
    duration_s: float = 0.0
    files: list = dc_field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.flags.values())

    def to_json_dict(self) -> dict:
        out = {"scenario": self.scenario}
        out.update(self.values)
        out.update({f"pass.{k}": bool(v) for k, v in self.flags.items()})
        out["pass.all"] = self.passed
        return out


def _parse_bool(key, text, where):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{where}: {key} expects a boolean, got {text!r}")


def _positive(key, text, where) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{where}: {key} expects a number, got {text!r}") from None
    if not (math.isfinite(value) and value > 0):
        raise ConfigError(f"{where}: {key} must be positive, got {text!r}")
    return value


def _integer(key, text, where, minimum=1) -> int:
    try:
        value = int(text)
    except ValueError:
        raise ConfigError(f"{where}: {key} expects an integer, got {text!r}") from None
    if value < minimum:
        raise ConfigError(f"{where}: {key} must be >= {minimum}, got {value}")
    return value


def parse_pairs(pairs) -> tuple[dict, dict]:
    """Validate ``(key, value, where)`` triples into experiment kwargs and run options."""
    exp: dict = {}
    run: dict = {}
    raw = {}
    for key, value, where in pairs:
        key = key.strip().lower()
        value = value.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        raw[key] = (value, where)

    for key, (value, where) in raw.items():
        if key in _LENGTH_KEYS:
            attr, scale = _LENGTH_KEYS[key]
            exp[attr] = _positive(key, value, where) * scale
        elif key == "n_source_points":
            exp["n_source_points"] = _integer(key, value, where)
        elif key == "grid_n_samples":
            n = _integer(key, value, where, minimum=2)
            if n % 2:
                raise ConfigError(f"{where}: grid_n_samples must be even, got {n}")
            exp["grid_n_samples"] = n
        elif key == "point_model":
            if value not in ("bandlimited", "sample", "gaussian"):
                raise ConfigError(f"{where}: point_model must be bandlimited, sample or gaussian")
            exp["point_model"] = value
        elif key in ("band_limit", "edge_taper"):
            exp[key] = _parse_bool(key, value, where)
        elif key == "emit":
            emit = tuple(sorted({p.strip() for p in value.split(",") if p.strip()}))
            if not emit or any(e not in EMIT_CHOICES for e in emit):
                raise ConfigError(f"{where}: emit must be a subset of csv,json")
            run["emit"] = emit
        elif key == "seed":
            seed = _integer(key, value, where, minimum=0)
            if seed >= 2**64:
                raise ConfigError(f"{where}: seed must fit in 64 bits")
            run["seed"] = seed

    if "slit_b" in raw or "slit_b_width_mm" in raw:
        kind, where = raw.get("slit_b", ("rect", raw.get("slit_b_width_mm", ("", "?"))[1]))
        if kind == "open":
            exp["slit_B"] = ApertureProfile.open()
        elif kind == "rect":
            width = 0.16
            if "slit_b_width_mm" in raw:
                width = _positive("slit_b_width_mm", *raw["slit_b_width_mm"])
            exp["slit_B"] = ApertureProfile.rect(width * 1e-3)
        else:
            raise ConfigError(f"{where}: slit_b must be 'rect' or 'open', got {kind!r}")

    if "source" in raw or "source_width_mm" in raw:
        kind, where = raw.get("source", ("rect", raw.get("source_width_mm", ("", "?"))[1]))
        width = 3.0
        if "source_width_mm" in raw:
            width = _positive("source_width_mm", *raw["source_width_mm"])
        if kind == "absent":
            exp["source"] = None
        elif kind == "rect":
            exp["source"] = ApertureProfile.rect(width * 1e-3)
        elif kind == "gaussian":
            # source_width_mm is the RMS intensity width for the Gaussian profile
            exp["source"] = ApertureProfile.gaussian(width * 1e-3)
        else:
            raise ConfigError(f"{where}: source must be rect, gaussian or absent, got {kind!r}")
    return exp, run


def read_config_file(path) -> list:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    pairs = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = text.split("=", 1)
        pairs.append((key, value, f"{path}:{lineno}"))
    return pairs


def load_config(scenario: str, config_path=None, sets=(), output_dir=None, seed=None) -> RunConfig:
    """Build a RunConfig from an optional file and ``key=value`` overrides.

    Later sources win: file, then ``--set`` flags, then explicit ``seed``.
    """
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}")
    pairs = read_config_file(config_path) if config_path else []
    for i, item in enumerate(sets, start=1):
        if "=" not in item:
            raise ConfigError(f"--set #{i}: expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        pairs.append((key, value, f"--set #{i}"))
    exp_kwargs, run_kwargs = parse_pairs(pairs)
    try:
        experiment = ExperimentConfig(**exp_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if seed is not None:
        run_kwargs["seed"] = seed
    return RunConfig(
        scenario=scenario,
        experiment=experiment,
        output_dir=Path(output_dir) if output_dir else Path("popper-out"),
        **run_kwargs,
    )


def config_echo(cfg: ExperimentConfig) -> dict:
    """Every resolved experiment parameter, flat and unit-suffixed."""
    echo = {}
    for key, (attr, scale) in _LENGTH_KEYS.items():
        echo[f"config.{key}"] = getattr(cfg, attr) / scale
    if cfg.slit_B.kind == "open":
        echo["config.slit_b"] = "open"
    else:
        echo["config.slit_b"] = cfg.slit_B.kind
        echo["config.slit_b_width_mm"] = cfg.slit_B.width * 1e3
    if cfg.source is None:
        echo["config.source"] = "absent"
    else:
        echo["config.source"] = cfg.source.kind
        size = cfg.source.width if cfg.source.kind == "rect" else cfg.source.rms
        echo["config.source_width_mm"] = size * 1e3
    echo["config.n_source_points_count"] = cfg.n_source_points
    echo["config.grid_n_samples_count"] = cfg.grid_n_samples
    echo["config.grid_dx_mm"] = cfg.grid.dx * 1e3
    echo["config.point_model"] = cfg.point_model
    echo["config.band_limit"] = cfg.band_limit
    echo["config.edge_taper"] = cfg.edge_taper
    return echo


def _round(value):
    """Stable 12-significant-digit floats for JSON output."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (float, np.floating)):
        return float(f"{float(value):.12g}")
    if isinstance(value, (int, np.integer)):
        return int(value)
    return value


def write_profile_csv(path: Path, profile: IntensityProfile) -> None:
    lines = ["y_mm,intensity"]
    for y, v in zip(profile.grid.y * 1e3, profile.intensity):
        lines.append(f"{y:.9g},{v:.9g}")
    path.write_text("\n".join(lines) + "\n")


def _width_values(prefix: str, profile) -> dict:
    rep = analysis.width_report(profile)
    return {
        f"{prefix}.first_minima_width_mm": None if rep.first_minima_full_width is None
        else rep.first_minima_full_width * 1e3,
        f"{prefix}.fwhm_mm": rep.fwhm * 1e3,
        f"{prefix}.rms_width_mm": rep.rms_width * 1e3,
        f"{prefix}.rms_window_half_mm": 0.5 * (rep.rms_window[1] - rep.rms_window[0]) * 1e3,
    }


def flat_variation(profile: IntensityProfile, half_range: float) -> float:
    """``(max - mean) / mean`` of the profile over ``|y| <= half_range``."""
    v = profile.intensity[np.abs(profile.grid.y) <= half_range]
    return float((v.max() - v.mean()) / v.mean())


# scenarios ------------------------------------------------------------------

def _kim_shih(run: RunConfig):
    cfg = run.experiment
    profiles = {
        "case-i": simulate_coincidence(cfg.case_i(
            cfg.slit_B.width if cfg.slit_B.kind == "rect" else None)),
        "case-ii": simulate_coincidence(cfg.case_ii()),
        "control": simulate_coincidence(cfg.case_i().with_(source=None)),
    }
    values = {}
    for name, prof in profiles.items():
        values.update(_width_values(name.replace("-", "_"), prof))
    w_i = analysis.width_between_first_minima(profiles["case-i"])
    w_ii = analysis.fwhm(profiles["case-ii"])
    auto = analysis.case_ratio_report(profiles["case-i"], profiles["case-ii"])
    variation = flat_variation(profiles["control"], FLAT_HALF_RANGE_MM * 1e-3)
    values.update({
        "case_ratio.ii_fwhm_over_i_first_minima_ratio": w_ii / w_i if w_i else None,
        "case_ratio.same_method_ratio": auto.ratio,
        "case_ratio.same_method": auto.method,
        "control.peak_to_mean_variation_ratio": variation,
        "measured.case_i_width_mm": MEASURED_CASE_I_MM,
        "measured.case_ii_width_mm": MEASURED_CASE_II_MM,
    })
    flags = {
        "case_i_width": w_i is not None
        and abs(w_i * 1e3 - MEASURED_CASE_I_MM) <= CASE_I_TOLERANCE * MEASURED_CASE_I_MM,
        "case_ii_fwhm": CASE_II_BAND_MM[0] <= w_ii * 1e3 <= CASE_II_BAND_MM[1],
        "case_ratio": w_i is not None and w_ii / w_i <= CASE_RATIO_MAX
        and w_i / w_ii >= CASE_RATIO_INVERSE_MIN,
        "control_flat": variation < FLAT_VARIATION_MAX,
    }
    return values, flags, profiles


def _psf(run: RunConfig):
    cfg = run.experiment
    prof = point_spread_function(cfg)
    if cfg.source.kind != "rect":
        raise ConfigError("psf scenario compares against the rect-aperture blur formula; "
                          "source must be rect")
    predicted = analysis.predicted_blur_width(cfg.source_to_image, cfg.wavelength,
                                              cfg.source.width)
    measured = analysis.width_between_first_minima(prof)
    ratio = None if measured is None else measured / predicted
    image_field = propagate_train(cfg, point_field(cfg, 0.0), PlaneTag.SLIT_A, PlaneTag.SLIT_B)
    unc = analysis.uncertainty_product(prof, momentum_distribution(image_field),
                                       "first-minima", "fwhm")
    values = _width_values("psf", prof)
    values.update({
        "psf.predicted_blur_width_mm": predicted * 1e3,
        "psf.measured_over_predicted_ratio": ratio,
        "psf.uncertainty.delta_y_mm": unc.delta_y * 1e3,
        "psf.uncertainty.delta_k_rad_per_m": unc.delta_p_over_hbar,
        "psf.uncertainty.product_over_h_ratio": unc.product_over_h,
        "psf.uncertainty.method": unc.method,
        "psf.uncertainty.predicted_product_over_h_ratio": 2.0,
    })
    flags = {
        "blur_width": ratio is not None and PSF_RATIO_BAND[0] <= ratio <= PSF_RATIO_BAND[1],
        "blurred_product_near_2h": 2.0 / 1.5 <= unc.product_over_h <= 2.0 * 1.5,
    }
    return values, flags, {"image": prof}


def _single_slit(run: RunConfig):
    cfg = run.experiment
    width = cfg.slit_B.width if cfg.slit_B.kind == "rect" else cfg.slit_A_width
    grid = cfg.grid
    plane = ComplexField1D(grid, (np.abs(grid.y) < 0.5 * width).astype(complex), cfg.wavelength)
    out = propagate_angular_spectrum(plane, cfg.d_B_D2, band_limit=cfg.band_limit)
    prof = IntensityProfile.normalized(grid, out.intensity, "peak", PlaneTag.D2)
    predicted = 2 * cfg.wavelength * cfg.d_B_D2 / width
    measured = analysis.width_between_first_minima(prof)
    values = _width_values("single_slit", prof)
    values.update({
        "single_slit.slit_width_mm": width * 1e3,
        "single_slit.predicted_first_minima_width_mm": predicted * 1e3,
        "single_slit.relative_error_ratio": None if measured is None
        else measured / predicted - 1,
    })
    flags = {"fraunhofer_width": measured is not None
             and abs(measured / predicted - 1) <= SINGLE_SLIT_TOLERANCE}
    return values, flags, {"d2": prof}


def _conditional_tests(run: RunConfig):
    res = conditional.run_randomized_suite(run.seed)
    values = {
        "conditional.trials_count": res["trials"],
        "conditional.robertson_violations_count": res["robertson_violations"],
        "conditional.conditional_robertson_violations_count":
            res["conditional_robertson_violations"],
        "conditional.ordering_violations_count": res["ordering_violations"],
        "conditional.ordering_max_discrepancy_prob": res["ordering_max_discrepancy"],
        "conditional.counterexample_draws_count": res["counterexample_draws"],
        "conditional.counterexample_max_discrepancy_prob":
            res["counterexample_max_discrepancy"],
    }
    flags = {
        "robertson": res["robertson_violations"] == 0,
        "conditional_robertson": res["conditional_robertson_violations"] == 0,
        "ordering_independence": res["ordering_violations"] == 0,
        "counterexample_found": res["counterexample_max_discrepancy"] > 1e-6,
    }
    return values, flags, {}


def phase_matching_sweep(n: int = 1024, window: float = 24e-3, wavelength: float = 702.2e-9):
    """Products for every (source width, correlation width) pair of the standard sweep."""
    grid = Grid1D.from_window(window, n)
    rows = []
    for s_mm in PHASE_MATCHING_SOURCES_MM:
        for samples in PHASE_MATCHING_CORRELATION_SAMPLES:
            state = two_photon_source_state(s_mm * 1e-3, samples * grid.dx, grid,
                                            wavelength=wavelength)
            dk, dy1, dy2, (p1, p2) = conditional.phase_matching_uncertainty(state)
            rows.append((s_mm, samples, dk, dy1, dy2, p1, p2))
    return rows


def _phase_matching(run: RunConfig):
    values = {}
    worst = math.inf
    for s_mm, samples, dk, dy1, dy2, p1, p2 in phase_matching_sweep(
            wavelength=run.experiment.wavelength):
        key = f"phase_matching.s{s_mm:g}mm_b{samples}"
        values[f"{key}.delta_sum_k_rad_per_m"] = dk
        values[f"{key}.delta_y1_mm"] = dy1 * 1e3
        values[f"{key}.delta_y2_mm"] = dy2 * 1e3
        values[f"{key}.product_y1_dimensionless"] = p1
        values[f"{key}.product_y2_dimensionless"] = p2
        worst = min(worst, p1, p2)
    values["phase_matching.min_product_dimensionless"] = worst
    return values, {"phase_matching_bound": worst >= 0.5 - 1e-6}, {}


_RUNNERS = {
    "kim-shih": _kim_shih,
    "psf": _psf,
    "single-slit": _single_slit,
    "conditional-tests": _conditional_tests,
    "phase-matching": _phase_matching,
}


def run_scenario(run: RunConfig) -> SummaryRecord:
    """Run one scenario and write its profiles and ``summary.json``.

    Wall-clock duration goes to ``timing.json`` so that ``summary.json``
    and the CSV files are byte-identical across repeated runs.
    """
    start = time.perf_counter()
    try:
        values, flags, profiles = _RUNNERS[run.scenario](run)
    except ConfigError:
        raise
    except ValueError as exc:
        raise RuntimeError(f"scenario {run.scenario!r} failed: {exc}") from exc
    record = SummaryRecord(run.scenario, {}, flags)
    record.values.update(config_echo(run.experiment))
    record.values["run.seed_uint64"] = run.seed
    record.values.update(values)
    record.values = {k: _round(v) for k, v in record.values.items()}

    out = run.output_dir
    out.mkdir(parents=True, exist_ok=True)
    if "csv" in run.emit:
        for case, prof in profiles.items():
            path = out / f"{run.scenario}_{case}.csv"
            write_profile_csv(path, prof)
            record.files.append(str(path))
    record.duration_s = time.perf_counter() - start
    if "json" in run.emit:
        path = out / "summary.json"
        path.write_text(json.dumps(record.to_json_dict(), indent=2, sort_keys=True) + "\n")
        record.files.append(str(path))
        (out / "timing.json").write_text(
            json.dumps({"scenario": run.scenario, "duration_s": record.duration_s}) + "\n")
    return record


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="popper", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("--scenario", required=True, choices=SCENARIOS)
    run.add_argument("--config", help="key = value configuration file")
    run.add_argument("--out", default="popper-out", help="output directory")
    run.add_argument("--seed", type=int, default=None, help="RNG seed (64-bit unsigned)")
    run.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                     help="override one configuration key; repeatable")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be a 64-bit unsigned integer")
        run = load_config(args.scenario, args.config, args.sets, args.out, args.seed)
        record = run_scenario(run)
    except ConfigError as exc:
        print(f"popper: configuration error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"popper: {exc}", file=sys.stderr)
        return 3
    for name, ok in record.flags.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    print(f"{run.scenario}: {'all flags pass' if record.passed else 'some flags failed'} "
          f"({record.duration_s:.2f} s)")
    return 0 if record.passed else 1


if __name__ == "__main__":
    sys.exit(main())
