import json

import numpy as np
import pytest

from nodal.cli import main


def run_cli(tmp_path, command, cfg, name="cfg.json", extra=()):
    cfg_path = tmp_path / name
    cfg_path.write_text(json.dumps(cfg))
    out_path = tmp_path / (name + ".out.json")
    code = main([command, "--config", str(cfg_path), "--out", str(out_path),
                 *extra])
    result = json.loads(out_path.read_text()) if out_path.exists() else None
    return code, result


def test_check_spectrum_sphere(tmp_path):
    code, res = run_cli(tmp_path, "check-spectrum",
                        {"measure": {"kind": "sphere", "radius": 1.0,
                                     "dim": 2}})
    assert code == 0
    r = res["result"]
    assert r["rho1"]["passed"] and r["rho2"]["passed"] and r["rho3"]["passed"]
    assert r["rho4"]["verdict"] == "satisfied_barrier"


def test_check_spectrum_cube(tmp_path):
    code, res = run_cli(tmp_path, "check-spectrum",
                        {"measure": {"kind": "cube", "halfwidth": 1.0,
                                     "dim": 2}})
    assert code == 0
    assert res["result"]["rho4"]["verdict"] == "satisfied_interior_point"


def test_check_spectrum_atom_pair_fails(tmp_path):
    code, res = run_cli(tmp_path, "check-spectrum",
                        {"measure": {"kind": "atoms",
                                     "points": [[1.0, 0.0], [-1.0, 0.0]],
                                     "weights": [0.5, 0.5]}})
    assert code == 2
    assert not res["result"]["rho2"]["passed"]
    assert not res["result"]["rho3"]["passed"]


def test_check_spectrum_gaussian(tmp_path):
    code, res = run_cli(tmp_path, "check-spectrum",
                        {"measure": {"kind": "gaussian", "scale": 0.5,
                                     "dim": 2}})
    assert code == 0
    assert res["result"]["rho4"]["verdict"] == "satisfied_interior_point"


def test_sample_file_bytes_and_determinism(tmp_path):
    cfg = {"ensemble": {"kind": "trigonometric", "degree": 20, "dim": 2},
           "grid_step": 0.5, "seed": 3, "out": str(tmp_path / "f1.bin")}
    code, res = run_cli(tmp_path, "sample", cfg, name="s1.json")
    assert code == 0
    n_pts = res["result"]["values"]
    assert (tmp_path / "f1.bin").stat().st_size == 16 + 8 * n_pts * 3
    cfg2 = dict(cfg, out=str(tmp_path / "f2.bin"))
    code, _ = run_cli(tmp_path, "sample", cfg2, name="s2.json")
    assert code == 0
    assert (tmp_path / "f1.bin").read_bytes() == \
        (tmp_path / "f2.bin").read_bytes()


def test_sample_invalid_degree_usage_error(tmp_path):
    cfg = {"ensemble": {"kind": "trigonometric", "degree": 0, "dim": 2},
           "seed": 0, "out": str(tmp_path / "x.bin")}
    code, _ = run_cli(tmp_path, "sample", cfg)
    assert code == 64


def test_malformed_config_usage_error(tmp_path):
    cfg_path = tmp_path / "broken.json"
    cfg_path.write_text("{not json")
    assert main(["check-spectrum", "--config", str(cfg_path)]) == 64


def test_census_pipeline(tmp_path):
    scfg = {"ensemble": {"kind": "stationary",
                         "rho": {"kind": "sphere", "radius": 1.0, "dim": 2},
                         "n_modes": 256},
            "window": {"half_extent": 6.0, "spacing": 0.1},
            "seed": 11, "out": str(tmp_path / "field.bin")}
    code, _ = run_cli(tmp_path, "sample", scfg, name="samp.json")
    assert code == 0
    ccfg = {"field": str(tmp_path / "field.bin"),
            "ball": {"center": [0.0, 0.0], "r": 4.0},
            "window_R": 4.0,
            "dump_labels": str(tmp_path / "labels.bin")}
    code, res = run_cli(tmp_path, "census", ccfg, name="census.json")
    assert code == 0
    r = res["result"]
    assert r["n_components"] >= 1
    assert r["counts"]["ball"]["N"] <= r["counts"]["ball"]["N_star"]
    assert r["counts"]["ball"]["N"] == r["counts"]["window"]["N_S"]
    assert "certified" in r
    assert (tmp_path / "labels.bin").exists()


def test_estimate_nu_csv_and_hash_stability(tmp_path):
    cfg = {"measure": {"kind": "cube", "halfwidth": 1.0, "dim": 1},
           "R_list": [5.0, 10.0], "r_list": [1.0], "n_samples": 10,
           "seed": 2, "spacing": 0.05, "n_modes": 128,
           "csv": str(tmp_path / "trace.csv")}
    code, res1 = run_cli(tmp_path, "estimate-nu", cfg, name="e1.json")
    assert code == 0
    code, res2 = run_cli(tmp_path, "estimate-nu", cfg, name="e2.json")
    assert res1 == res2
    assert res1["config_hash"] == res2["config_hash"]
    csv_text = (tmp_path / "trace.csv").read_text().splitlines()
    assert csv_text[0] == ("R,nu_hat,stderr,bracket_low,bracket_high,"
                           "certified_fraction")
    assert len(csv_text) == 3


def test_kernel_converge_command(tmp_path):
    cfg = {"ensemble_kind": "trigonometric", "dim": 2,
           "degrees": [10, 40], "probe_extent": 2.0}
    code, res = run_cli(tmp_path, "kernel-converge", cfg)
    assert code == 0
    assert res["result"]["strictly_decreasing"]


def test_det_scaling_command(tmp_path):
    cfg = {"measure": {"kind": "cube", "halfwidth": 1.0, "dim": 1},
           "matrix": [[1.0]], "R": 8.0, "n_samples": 6, "seed": 1,
           "spacing": 0.05, "n_modes": 128}
    code, res = run_cli(tmp_path, "det-scaling", cfg)
    assert code == 0
    assert res["result"]["ratio"] == pytest.approx(1.0)


def test_kostlan_total_command(tmp_path):
    cfg = {"n_list": [1, 2], "n_samples": 4, "seed": 0}
    code, res = run_cli(tmp_path, "kostlan-total", cfg)
    assert code == 0
    assert res["result"]["means"][0] == pytest.approx(1.0)


def test_double_scaling_command(tmp_path):
    cfg = {"ensemble_kind": "trigonometric", "dim": 1, "x": [0.0],
           "R_list": [3.0], "L_list": [32], "n_samples": 10, "seed": 4,
           "spacing": 0.05}
    code, res = run_cli(tmp_path, "double-scaling", cfg)
    assert code == 0
    assert res["result"]["nu_bar"] > 0


def test_sandwich_audit_command(tmp_path):
    cfg = {"n_fields": 3, "degree": 24, "dim": 2, "R": 6.0,
           "r_list": [1.0], "spacing": 0.08, "seed": 5}
    code, res = run_cli(tmp_path, "sandwich-audit", cfg)
    assert code == 0
    assert res["result"]["violations"] == 0
