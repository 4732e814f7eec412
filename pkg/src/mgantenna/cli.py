"""Command-line front end: JSON config in, deterministic CSV/JSON artifacts out.

Example::

    mgantenna sweep --config design.json --out runs/sweep --seed 3

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O failure.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, radiation, specfun, validate, vsie
from .errors import MGAError, ValidationError
from .geometry import C0, KIND_NAMES, DesignSpec, build_scene
from .optimize import METHODS, maximize_directivity

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
MODES = ("solve", "optimize", "sweep", "pattern", "nearfield")

_SPEC_FIELDS = DesignSpec.__dataclass_fields__
DESIGN_DEFAULTS = {
    "length_unit": "m",
    "substrate_thickness": None,  # 0.0085 wavelengths
    "substrate_rel_permittivity": 3.0,
    "wire_strip_width": None,
    "ground_width": None,
    "source_position": None,
    "source_amplitude": 1.0,
    "segments_per_wire": _SPEC_FIELDS["segments_per_wire"].default,
    "ground_segments_per_wavelength": _SPEC_FIELDS["ground_segments_per_wavelength"].default,
    "cells_per_wavelength_lateral": _SPEC_FIELDS["cells_per_wavelength_lateral"].default,
    "cells_through_thickness": _SPEC_FIELDS["cells_through_thickness"].default,
    "reactance_bounds": list(_SPEC_FIELDS["reactance_bounds"].default),
}
DESIGN_REQUIRED = ("frequency", "aperture_width", "wire_spacing")
DEFAULT_THICKNESS_WL = 0.0085

RUN_DEFAULTS = {
    "mode": "optimize",
    "theta_o_deg": 0.0,
    "sweep_angles": [0.0, 30.0, 45.0, 60.0, 70.0],
    "sample_count": radiation.DEFAULT_SAMPLE_COUNT,
    "optimizer": {"max_iter": 200, "tol": 1e-6, "restarts": 8, "method": "newton"},
    "output_dir": "out",
    "seed": 0,
    "X_ohm_per_sq": None,
    "normalization": "global",
    "nearfield": {"y_range_wl": None, "z_range_wl": [0.0, 2.0], "ny": 161, "nz": 81},
    "convergence_levels": None,
}


class ConfigError(MGAError, ValueError):
    """Invalid configuration; the message starts with the offending key path."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _merge(defaults, given, path):
    out = copy.deepcopy(defaults)
    if not isinstance(given, dict):
        raise ConfigError(f"{path}: expected an object")
    for key, value in given.items():
        if key not in defaults:
            raise ConfigError(f"{path}.{key}: unknown key")
        if isinstance(defaults[key], dict):
            out[key] = _merge(defaults[key], value, f"{path}.{key}")
        else:
            out[key] = value
    return out


def _number(value, path, positive=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{path}: must be finite")
    if integer and int(value) != value:
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if positive and value <= 0:
        raise ConfigError(f"{path}: must be positive, got {value!r}")
    return int(value) if integer else float(value)


def design_from_config(design: dict) -> DesignSpec:
    """Build the :class:`DesignSpec` described by a fully merged ``design`` section."""
    unit = design["length_unit"]
    if unit not in ("m", "wavelength"):
        raise ConfigError(f"design.length_unit: expected 'm' or 'wavelength', got {unit!r}")
    freq = _number(design["frequency"], "design.frequency", positive=True)
    scale = C0 / freq if unit == "wavelength" else 1.0

    def length(key):
        value = design[key]
        return None if value is None else _number(value, f"design.{key}", positive=True) * scale

    thickness = length("substrate_thickness")
    if thickness is None:
        thickness = DEFAULT_THICKNESS_WL * C0 / freq
    src = design["source_position"]
    if src is not None:
        if not (isinstance(src, list) and len(src) == 2):
            raise ConfigError("design.source_position: expected [y, z]")
        src = tuple(_number(v, "design.source_position") * scale for v in src)
    amp = design["source_amplitude"]
    if isinstance(amp, list) and len(amp) == 2:
        amp = complex(_number(amp[0], "design.source_amplitude"), _number(amp[1], "design.source_amplitude"))
    else:
        amp = _number(amp, "design.source_amplitude")
    if amp == 0:
        raise ConfigError("design.source_amplitude: must be nonzero")
    bounds = design["reactance_bounds"]
    if not (isinstance(bounds, list) and len(bounds) == 2):
        raise ConfigError("design.reactance_bounds: expected [X_min, X_max]")
    bounds = tuple(_number(v, "design.reactance_bounds") for v in bounds)
    if bounds[0] > bounds[1]:
        raise ConfigError(f"design.reactance_bounds: X_min {bounds[0]} > X_max {bounds[1]}")
    counts = {key: _number(design[key], f"design.{key}", positive=True, integer=True)
              for key in ("segments_per_wire", "ground_segments_per_wavelength",
                          "cells_per_wavelength_lateral", "cells_through_thickness")}
    eps_r = _number(design["substrate_rel_permittivity"], "design.substrate_rel_permittivity")
    if eps_r < 1:
        raise ConfigError(f"design.substrate_rel_permittivity: must be >= 1, got {eps_r}")
    try:
        return DesignSpec(
            frequency=freq,
            aperture_width=length("aperture_width"),
            wire_spacing=length("wire_spacing"),
            substrate_thickness=thickness,
            substrate_rel_permittivity=eps_r,
            wire_strip_width=length("wire_strip_width"),
            ground_width=length("ground_width"),
            source_position=src,
            source_amplitude=amp,
            reactance_bounds=bounds,
            **counts,
        )
    except ValidationError as exc:
        raise ConfigError(f"design: {exc}") from exc


def _check_run(run: dict, spec: DesignSpec):
    if run["mode"] not in MODES:
        raise ConfigError(f"run.mode: expected one of {', '.join(MODES)}, got {run['mode']!r}")
    theta = _number(run["theta_o_deg"], "run.theta_o_deg")
    if not -90 <= theta <= 90:
        raise ConfigError(f"run.theta_o_deg: must lie in [-90, 90], got {theta}")
    if not isinstance(run["sweep_angles"], list) or not run["sweep_angles"]:
        raise ConfigError("run.sweep_angles: expected a non-empty list")
    for i, a in enumerate(run["sweep_angles"]):
        if not -90 <= _number(a, f"run.sweep_angles[{i}]") <= 90:
            raise ConfigError(f"run.sweep_angles[{i}]: must lie in [-90, 90]")
    n = _number(run["sample_count"], "run.sample_count", positive=True, integer=True)
    if n < radiation.DEFAULT_SAMPLE_COUNT or n % 2 == 0:
        raise ConfigError(f"run.sample_count: must be odd and >= {radiation.DEFAULT_SAMPLE_COUNT}, got {n}")
    opt = run["optimizer"]
    _number(opt["max_iter"], "run.optimizer.max_iter", positive=True, integer=True)
    _number(opt["tol"], "run.optimizer.tol", positive=True)
    _number(opt["restarts"], "run.optimizer.restarts", positive=True, integer=True)
    if opt["method"] not in METHODS:
        raise ConfigError(f"run.optimizer.method: expected one of {sorted(METHODS)}, got {opt['method']!r}")
    _number(run["seed"], "run.seed", integer=True)
    if run["seed"] < 0:
        raise ConfigError("run.seed: must be non-negative")
    if run["normalization"] not in ("global", "per_curve"):
        raise ConfigError("run.normalization: expected 'global' or 'per_curve'")
    if not isinstance(run["output_dir"], str):
        raise ConfigError("run.output_dir: expected a path string")
    X = run["X_ohm_per_sq"]
    if X is not None:
        if not isinstance(X, list) or len(X) != spec.n_wires:
            raise ConfigError(f"run.X_ohm_per_sq: expected a list of {spec.n_wires} reactances")
        lo, hi = spec.reactance_bounds
        for i, v in enumerate(X):
            if not lo <= _number(v, f"run.X_ohm_per_sq[{i}]") <= hi:
                raise ConfigError(f"run.X_ohm_per_sq[{i}]: {v} outside reactance_bounds [{lo}, {hi}]")
    elif run["mode"] in ("solve", "pattern"):
        raise ConfigError(f"run.X_ohm_per_sq: required for mode {run['mode']!r}")
    nf = run["nearfield"]
    for key in ("y_range_wl", "z_range_wl"):
        rng = nf[key]
        if rng is not None and not (isinstance(rng, list) and len(rng) == 2 and rng[0] < rng[1]):
            raise ConfigError(f"run.nearfield.{key}: expected [min, max] with min < max")
    for key in ("ny", "nz"):
        _number(nf[key], f"run.nearfield.{key}", positive=True, integer=True)
    levels = run["convergence_levels"]
    if levels is not None:
        if not isinstance(levels, list) or len(levels) < 2:
            raise ConfigError("run.convergence_levels: expected a list of at least two integers")
        for i, lv in enumerate(levels):
            _number(lv, f"run.convergence_levels[{i}]", positive=True, integer=True)


def load_config(source) -> tuple[DesignSpec, dict]:
    """Parse and validate a config (path or dict); return ``(spec, resolved_config)``."""
    if isinstance(source, (str, Path)):
        try:
            raw = json.loads(Path(source).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"<root>: invalid JSON ({exc})") from exc
    else:
        raw = copy.deepcopy(source)
    if not isinstance(raw, dict):
        raise ConfigError("<root>: expected an object")
    for key in raw:
        if key not in ("design", "run"):
            raise ConfigError(f"{key}: unknown key")
    if "design" not in raw:
        raise ConfigError("design: missing required section")
    for key in DESIGN_REQUIRED:
        if key not in raw["design"]:
            raise ConfigError(f"design.{key}: missing required key")
    design = _merge({**DESIGN_DEFAULTS, **{k: None for k in DESIGN_REQUIRED}}, raw["design"], "design")
    run = _merge(RUN_DEFAULTS, raw.get("run", {}), "run")
    spec = design_from_config(design)
    _check_run(run, spec)
    return spec, {"design": design, "run": run}


def resolved_design_document(spec: DesignSpec) -> dict:
    """Every DesignSpec field, in meters, with defaults made explicit."""
    r = spec.resolved()
    amp = complex(r.source_amplitude)
    return {
        "length_unit": "m",
        "frequency": r.frequency,
        "aperture_width": r.aperture_width,
        "wire_spacing": r.wire_spacing,
        "substrate_thickness": r.substrate_thickness,
        "substrate_rel_permittivity": r.substrate_rel_permittivity,
        "wire_strip_width": r.wire_strip_width,
        "ground_width": r.ground_width,
        "source_position": list(r.source_position),
        "source_amplitude": amp.real if amp.imag == 0 else [amp.real, amp.imag],
        "segments_per_wire": r.segments_per_wire,
        "ground_segments_per_wavelength": r.ground_segments_per_wavelength,
        "cells_per_wavelength_lateral": r.cells_per_wavelength_lateral,
        "cells_through_thickness": r.cells_through_thickness,
        "reactance_bounds": list(r.reactance_bounds),
    }


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------

def fmt(x) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def _json_ready(obj):
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def _write_json(path: Path, obj):
    path.write_text(json.dumps(_json_ready(obj), indent=2, sort_keys=False) + "\n", encoding="utf-8")


def write_currents(path, currents: vsie.CurrentSolution):
    scene = currents.scene
    counters = {}
    rows = []
    for p in range(scene.size):
        kind = KIND_NAMES[int(scene.kind[p])]
        idx = counters.get(kind, 0)
        counters[kind] = idx + 1
        J = currents.J[p]
        rows.append([kind, str(idx), scene.centers[p, 0], scene.centers[p, 1], J.real, J.imag])
    _write_csv(path, ["kind", "index", "y_m", "z_m", "re_J", "im_J"], rows)


def write_pattern(path, pattern: radiation.RadiationPattern, reference_D: float):
    d = radiation.directivity_pattern(pattern)
    with np.errstate(divide="ignore"):
        db = 10 * np.log10(d / reference_D)
    rows = [[t, F.real, F.imag, v] for t, F, v in zip(pattern.theta_deg, pattern.E_ff, db)]
    _write_csv(path, ["theta_deg", "re_F", "im_F", "directivity_db_norm"], rows)


def write_nearfield(path, y, z, field_map):
    rows = []
    for iz, zv in enumerate(z):
        for iy, yv in enumerate(y):
            E = field_map[iz, iy]
            rows.append([yv, zv, E.real, E.imag, abs(E)])
    _write_csv(path, ["y_m", "z_m", "re_E", "im_E", "abs_E"], rows)


def write_convergence(path, study: validate.ConvergenceStudy):
    rows = [[str(r.level), str(r.n_unknowns), r.D2D, r.peak_angle, r.max_residual] for r in study.rows]
    _write_csv(path, ["level", "n_unknowns", "D2D", "peak_angle_deg", "max_residual"], rows)


# ---------------------------------------------------------------------------
# modes
# ---------------------------------------------------------------------------

def _peak_directivity(pattern):
    return float(radiation.directivity_pattern(pattern).max())


def _optimize(spec, run, theta):
    opt = run["optimizer"]
    return maximize_directivity(spec, theta, max_iter=int(opt["max_iter"]), tol=float(opt["tol"]),
                                restarts=int(opt["restarts"]), seed=int(run["seed"]),
                                method=opt["method"],
                                sample_count=int(run["sample_count"]))


def _report_document(report, reference_D):
    return {
        "theta_o_deg": report.theta_o,
        "final_D2D": report.final_D,
        "final_D2D_db_norm": 10 * math.log10(report.final_D / reference_D),
        "X_ohm_per_sq": [float(x) for x in report.final_X.X],
        "iterations": report.iterations,
        "converged": bool(report.converged),
        "seed": report.rng_seed,
        "best_restart": report.best_restart,
        "wall_time_s": report.wall_time,
        "iterate_history": [[i, d, g] for i, d, g in report.iterates],
    }


def _metrics_document(pattern, theta_o):
    m = radiation.pattern_metrics(pattern).as_dict()
    m["theta_o_deg"] = theta_o
    m["D2D_at_theta_o"] = radiation.directivity(pattern, theta_o)
    m["D2D_peak"] = _peak_directivity(pattern)
    return m


def run_solve(spec, run, out: Path):
    scene = build_scene(spec)
    cur = vsie.solve_design(scene, np.array(run["X_ohm_per_sq"], dtype=float))
    pattern = radiation.sample_pattern(cur, int(run["sample_count"]))
    write_currents(out / "currents.csv", cur)
    write_pattern(out / "pattern.csv", pattern, _peak_directivity(pattern))
    metrics = _metrics_document(pattern, float(run["theta_o_deg"]))
    res = vsie.boundary_residual(cur)
    metrics["boundary_residual_max"] = res.max
    metrics["boundary_residual_rms"] = res.rms
    metrics["n_unknowns"] = scene.size
    _write_json(out / "metrics.json", metrics)
    if run["convergence_levels"]:
        study = validate.convergence_study(spec, np.array(run["X_ohm_per_sq"], dtype=float),
                                           float(run["theta_o_deg"]), run["convergence_levels"],
                                           int(run["sample_count"]))
        write_convergence(out / "convergence.csv", study)


def run_pattern(spec, run, out: Path):
    cur = vsie.solve_design(build_scene(spec), np.array(run["X_ohm_per_sq"], dtype=float))
    pattern = radiation.sample_pattern(cur, int(run["sample_count"]))
    write_pattern(out / "pattern.csv", pattern, _peak_directivity(pattern))


def run_optimize(spec, run, out: Path):
    report = _optimize(spec, run, float(run["theta_o_deg"]))
    ref = _peak_directivity(report.final_pattern)
    _write_json(out / "report.json", _report_document(report, ref))
    write_pattern(out / "pattern.csv", report.final_pattern, ref)
    return report


def _angle_tag(theta):
    return f"theta_{theta:+06.1f}".replace(".", "p")


def run_sweep(spec, run, out: Path):
    angles = [float(a) for a in run["sweep_angles"]]
    reports = {a: _optimize(spec, run, a) for a in angles}
    if run["normalization"] == "global":
        ref_report = reports.get(0.0) or _optimize(spec, run, 0.0)
        global_ref = _peak_directivity(ref_report.final_pattern)
    rows = []
    for a in angles:
        rep = reports[a]
        ref = global_ref if run["normalization"] == "global" else _peak_directivity(rep.final_pattern)
        sub = out / _angle_tag(a)
        sub.mkdir(parents=True, exist_ok=True)
        _write_json(sub / "report.json", _report_document(rep, ref))
        write_pattern(sub / "pattern.csv", rep.final_pattern, ref)
        m = radiation.pattern_metrics(rep.final_pattern)
        rows.append([a, m.peak_angle, m.max_sidelobe_db, rep.final_D,
                     10 * math.log10(_peak_directivity(rep.final_pattern) / ref)])
    _write_csv(out / "summary.csv",
               ["theta_o_deg", "peak_angle_deg", "max_sidelobe_db", "D2D", "D_norm_db"], rows)


def nearfield_grid(spec: DesignSpec, nf: dict):
    lam = spec.wavelength
    if nf["y_range_wl"] is None:
        half = 0.5 * spec.ground_extent / lam + 0.5
        y_range = (-half, half)
    else:
        y_range = nf["y_range_wl"]
    y = np.linspace(y_range[0], y_range[1], int(nf["ny"])) * lam
    z = np.linspace(nf["z_range_wl"][0], nf["z_range_wl"][1], int(nf["nz"])) * lam
    return y, z


def run_nearfield(spec, run, out: Path):
    if run["X_ohm_per_sq"] is None:
        report = run_optimize(spec, run, out)
        X = report.final_X.X
    else:
        X = np.array(run["X_ohm_per_sq"], dtype=float)
    cur = vsie.solve_design(build_scene(spec), X)
    y, z = nearfield_grid(spec, run["nearfield"])
    write_nearfield(out / "nearfield.csv", y, z, vsie.near_field_map(cur, y, z))


RUNNERS = {
    "solve": run_solve,
    "optimize": run_optimize,
    "sweep": run_sweep,
    "pattern": run_pattern,
    "nearfield": run_nearfield,
}


def version_text() -> str:
    lines = [
        f"mgantenna {__version__}",
        "kernel: -(k eta / 4) H0^(2)(k R), pulse basis, reciprocal center collocation",
        f"bessel switch point: {specfun.SWITCH_POINT:g}",
        f"near-term factor: {vsie.NEAR_FACTOR:g} element sizes",
        f"near-term gauss points: {vsie.NEAR_GAUSS_POINTS}",
        f"volume self-term polar gauss points: {vsie.SELF_POLAR_GAUSS_POINTS} per sector",
        "pattern quadrature: composite trapezoid",
    ]
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mgantenna", description=__doc__.split("\n")[0],
                                     formatter_class=argparse.RawTextHelpFormatter)
    parser.add_argument("--version", action="version", version=version_text())
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", help="output directory (overrides run.output_dir)")
        p.add_argument("--seed", type=int, help="optimizer seed (overrides run.seed)")
        p.add_argument("--theta", type=float, help="target angle in degrees (overrides run.theta_o_deg)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        spec, cfg = load_config(args.config)
        run = cfg["run"]
        run["mode"] = args.mode
        if args.out is not None:
            run["output_dir"] = args.out
        if args.seed is not None:
            run["seed"] = args.seed
        if args.theta is not None:
            run["theta_o_deg"] = args.theta
        _check_run(run, spec)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    out = Path(run["output_dir"])
    resolved = {"design": resolved_design_document(spec), "run": run}
    try:
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "resolved_config.json", resolved)
        RUNNERS[args.mode](spec, run, out)
        _write_json(out / "run_meta.json", {
            "mgantenna_version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "mode": args.mode,
            "seed": run["seed"],
            "wall_time_s": time.perf_counter() - t0,
        })
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except MGAError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
