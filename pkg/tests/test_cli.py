import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from mgantenna import __version__, cli
from mgantenna.errors import SolverError

C = 299792458.0
SMALL = {"frequency": 10e9, "aperture_width": 1.0, "wire_spacing": 0.25, "length_unit": "wavelength"}


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def _run(tmp_path, mode, run=None, design=None, extra=()):
    cfg = {"design": design or SMALL, "run": {"optimizer": {"restarts": 2, "max_iter": 30}, **(run or {})}}
    out = tmp_path / mode
    code = cli.main([mode, "--config", _write(tmp_path, cfg, f"{mode}.json"), "--out", str(out), *extra])
    return code, out


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_minimal_config_fills_defaults():
    spec, cfg = cli.load_config({"design": {"frequency": 10e9, "aperture_width": 0.21, "wire_spacing": 0.0075}})
    lam = C / 10e9
    assert spec.substrate_thickness == pytest.approx(0.0085 * lam)
    assert spec.substrate_rel_permittivity == 3.0
    assert spec.reactance_bounds == (-11.5, -10.5)
    assert cfg["run"]["seed"] == 0 and cfg["run"]["sample_count"] == 181
    assert cfg["run"]["optimizer"] == {"max_iter": 200, "tol": 1e-6, "restarts": 8, "method": "newton"}


def test_paper_design_has_28_wires():
    spec, _ = cli.load_config({"design": {"frequency": 10e9, "aperture_width": 7, "wire_spacing": 0.25,
                                          "substrate_thickness": 0.0085, "substrate_rel_permittivity": 3,
                                          "length_unit": "wavelength"}})
    assert spec.n_wires == 28


@pytest.mark.parametrize("cfg, path", [
    ({"design": {**SMALL, "substrate_rel_permittivity": 0.5}}, "design.substrate_rel_permittivity"),
    ({"design": {**SMALL, "colour": 1}}, "design.colour"),
    ({"design": SMALL, "run": {"optimizer": {"step": 1}}}, "run.optimizer.step"),
    ({"design": {"frequency": 10e9, "aperture_width": 1.0}}, "design.wire_spacing"),
    ({"design": SMALL, "run": {"theta_o_deg": 95}}, "run.theta_o_deg"),
    ({"design": SMALL, "run": {"sample_count": 180}}, "run.sample_count"),
    ({"design": SMALL, "run": {"optimizer": {"method": "sqp"}}}, "run.optimizer.method"),
    ({"design": SMALL, "run": {"mode": "solve"}}, "run.X_ohm_per_sq"),
    ({"design": SMALL, "run": {"X_ohm_per_sq": [-11, -11, -11, -12]}}, "run.X_ohm_per_sq[3]"),
    ({"design": {**SMALL, "reactance_bounds": [1, -1]}}, "design.reactance_bounds"),
    ({"design": SMALL, "extra": {}}, "extra"),
])
def test_bad_config_names_key(cfg, path):
    with pytest.raises(cli.ConfigError, match=r"^" + path.replace("[", r"\[").replace("]", r"\]")):
        cli.load_config(cfg)


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, {"design": {**SMALL, "substrate_rel_permittivity": 0.5}})
    assert cli.main(["optimize", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "design.substrate_rel_permittivity" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_invalid_json_exit_code(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{design:")
    assert cli.main(["optimize", "--config", str(path)]) == 2


def test_missing_config_is_io_error(tmp_path):
    assert cli.main(["optimize", "--config", str(tmp_path / "none.json")]) == 4


def test_unwritable_output_is_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    cfg = _write(tmp_path, {"design": SMALL, "run": {"X_ohm_per_sq": [-11.0] * 4}})
    assert cli.main(["pattern", "--config", cfg, "--out", str(blocker / "sub")]) == 4


def test_numeric_failure_exit_code(tmp_path, monkeypatch):
    def fail(*args):
        raise SolverError("singular")
    monkeypatch.setitem(cli.RUNNERS, "pattern", fail)
    cfg = _write(tmp_path, {"design": SMALL, "run": {"X_ohm_per_sq": [-11.0] * 4}})
    assert cli.main(["pattern", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_solve_artifacts(tmp_path):
    code, out = _run(tmp_path, "solve", {"X_ohm_per_sq": [-11.0, -10.9, -10.9, -11.0],
                                         "convergence_levels": [1, 2]})
    assert code == 0
    rows = _rows(out / "currents.csv")
    assert rows[0] == ["kind", "index", "y_m", "z_m", "re_J", "im_J"]
    assert {r[0] for r in rows[1:]} == {"wire", "ground", "cell"}
    assert _rows(out / "pattern.csv")[0] == ["theta_deg", "re_F", "im_F", "directivity_db_norm"]
    assert len(_rows(out / "pattern.csv")) == 182
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["n_unknowns"] == len(rows) - 1
    assert metrics["D2D_peak"] >= metrics["D2D_at_theta_o"] > 0
    assert _rows(out / "convergence.csv")[0] == ["level", "n_unknowns", "D2D", "peak_angle_deg", "max_residual"]
    for name in ("resolved_config.json", "run_meta.json"):
        assert (out / name).exists()


def test_pattern_peak_normalized(tmp_path):
    code, out = _run(tmp_path, "pattern", {"X_ohm_per_sq": [-11.0] * 4})
    assert code == 0
    db = np.array([float(r[3]) for r in _rows(out / "pattern.csv")[1:]])
    assert db.max() == 0.0


def test_optimize_report(tmp_path):
    code, out = _run(tmp_path, "optimize", extra=("--theta", "20", "--seed", "3"))
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["theta_o_deg"] == 20.0 and report["seed"] == 3
    assert len(report["X_ohm_per_sq"]) == 4
    assert report["iterate_history"][-1][1] == report["final_D2D"]
    resolved = json.loads((out / "resolved_config.json").read_text())
    assert resolved["run"]["theta_o_deg"] == 20.0 and resolved["run"]["seed"] == 3


def test_sweep_summary(tmp_path):
    code, out = _run(tmp_path, "sweep", {"sweep_angles": [0, 30]})
    assert code == 0
    rows = _rows(out / "summary.csv")
    assert rows[0] == ["theta_o_deg", "peak_angle_deg", "max_sidelobe_db", "D2D", "D_norm_db"]
    assert [float(r[0]) for r in rows[1:]] == [0.0, 30.0]
    assert float(rows[1][4]) == 0.0
    for tag in ("theta_+000p0", "theta_+030p0"):
        assert (out / tag / "report.json").exists() and (out / tag / "pattern.csv").exists()


def test_nearfield_grid(tmp_path):
    code, out = _run(tmp_path, "nearfield", {"X_ohm_per_sq": [-11.0] * 4,
                                             "nearfield": {"ny": 11, "nz": 5}})
    assert code == 0
    rows = _rows(out / "nearfield.csv")
    assert rows[0] == ["y_m", "z_m", "re_E", "im_E", "abs_E"]
    assert len(rows) == 1 + 11 * 5


def test_rerun_is_byte_identical(tmp_path):
    def report(sub):
        code, out = _run(tmp_path / sub, "optimize", extra=("--seed", "4"))
        assert code == 0
        doc = json.loads((out / "report.json").read_text())
        doc.pop("wall_time_s")
        return json.dumps(doc)
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    assert report("a") == report("b")


def test_resolved_config_regenerates_run(tmp_path):
    code, out = _run(tmp_path, "pattern", {"X_ohm_per_sq": [-11.0] * 4})
    again = tmp_path / "again"
    assert cli.main(["pattern", "--config", str(out / "resolved_config.json"), "--out", str(again)]) == 0
    assert (out / "pattern.csv").read_bytes() == (again / "pattern.csv").read_bytes()


def test_floats_round_trip():
    for x in (np.pi, 1 / 3, -1.2345678901234567e-300, 2.0 ** 0.5 * 1e10):
        assert float(cli.fmt(x)) == x


def test_version_lists_constants():
    proc = subprocess.run([sys.executable, "-m", "mgantenna.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    lines = proc.stdout.splitlines()
    assert lines[0] == f"mgantenna {__version__}"
    assert any(line.startswith("bessel switch point") for line in lines)
    assert any(line.startswith("near-term factor") for line in lines)
