import csv
import subprocess
import sys

import pytest
import yaml

from detuned_kerr.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main


def run(tmp_path, command, cfg=None, *flags, name="cfg.yaml", out="out"):
    argv = [command, "--out", str(tmp_path / out), "--threads", "1", *flags]
    if cfg is not None:
        path = tmp_path / name
        path.write_text(cfg if isinstance(cfg, str) else yaml.safe_dump(cfg))
        argv += ["--config", str(path)]
    return main(argv)


def rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_spectrum_and_manifest(tmp_path):
    cfg = {"system": {"alpha2": 4.0, "delta_over_K": [0.0, 2.0, 3.0]}, "spectrum": {"n_pairs": 3}}
    assert run(tmp_path, "spectrum", cfg) == EXIT_OK
    table = rows(tmp_path / "out" / "spectrum.csv")
    assert table[0] == ["delta_over_K", "n", "delta_n_over_K"]
    assert len(table) == 1 + 3 * 3
    # m = 1: the two lowest pairs are degenerate
    at2 = [r for r in table[1:] if float(r[0]) == 2.0]
    assert abs(float(at2[0][2])) < 1e-9 and abs(float(at2[1][2])) < 1e-9
    man = yaml.safe_load((tmp_path / "out" / "manifest.yaml").read_text())
    assert man["command"] == "spectrum" and man["outputs"] == ["spectrum.csv"]


def test_unknown_key_and_section(tmp_path, capsys):
    assert run(tmp_path, "spectrum", {"system": {"alpha": 2.0}}) == EXIT_CONFIG
    assert "alpha" in capsys.readouterr().err
    assert run(tmp_path, "spectrum", {"bogus": {}}) == EXIT_CONFIG


def test_bad_values(tmp_path):
    assert run(tmp_path, "excursion", {"system": {"nbar": []}}) == EXIT_CONFIG
    assert run(tmp_path, "excursion", {"noise": {"kappa1_over_K": -1.0}}) == EXIT_CONFIG
    assert run(tmp_path, "excursion", "system: [unclosed") == EXIT_CONFIG
    assert main(["spectrum", "--threads", "0", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_numeric_failure_marks_output(tmp_path):
    cfg = {"system": {"nbar": [4], "delta_over_K": [0]}, "truncation": {"dim_cap": 20}}
    assert run(tmp_path, "colored", cfg) == EXIT_NUMERIC
    table = rows(tmp_path / "out" / "colored.csv")
    assert table[-1][0].startswith("# FAILED")
    man = yaml.safe_load((tmp_path / "out" / "manifest.yaml").read_text())
    assert "failure" in man


def test_steadystate_schema(tmp_path):
    cfg = {"system": {"nbar": [4], "delta_over_K": [2]}, "truncation": {"eigen_levels": 8}}
    assert run(tmp_path, "steadystate", cfg) == EXIT_OK
    table = rows(tmp_path / "out" / "steadystate.csv")
    assert table[0] == ["nbar", "delta_over_K", "pair_index", "parity", "population", "nbar_ex"]
    body = table[1:]
    assert [r[2] for r in body] == ["0", "0", "1", "1", "2", "2", "3", "3"]
    assert [r[3] for r in body] == ["1", "-1"] * 4
    assert sum(float(r[4]) for r in body) == pytest.approx(1.0, abs=1e-9)


def test_deterministic_and_manifest_rerun(tmp_path):
    cfg = {"system": {"nbar": [4], "delta_over_K": [0]}, "truncation": {"eigen_levels": 8}}
    assert run(tmp_path, "steadystate", cfg, "--check-convergence", out="a") == EXIT_OK
    assert run(tmp_path, "steadystate", cfg, "--check-convergence", out="b") == EXIT_OK
    a = (tmp_path / "a" / "steadystate.csv").read_bytes()
    assert a == (tmp_path / "b" / "steadystate.csv").read_bytes()
    assert b"population_convergence_rel" in a
    rerun = main(["steadystate", "--config", str(tmp_path / "a" / "manifest.yaml"), "--out", str(tmp_path / "c"), "--threads", "1"])
    assert rerun == EXIT_OK
    assert (tmp_path / "c" / "steadystate.csv").read_bytes() == a


def test_wigner_command(tmp_path):
    cfg = {"system": {"nbar": 4, "delta_over_K": 0}, "wigner": {"resolution": 21, "x_range": [-3, 3], "p_range": [-3, 3]}}
    assert run(tmp_path, "wigner", cfg) == EXIT_OK
    assert rows(tmp_path / "out" / "wigner.csv")[0] == ["x", "p", "w"]
    assert (tmp_path / "out" / "wigner.svg").exists()


def test_gate_command(tmp_path):
    cfg = {"system": {"nbar": 4, "delta_over_K": 0}, "gate": {"T_in_inv_K": [5.0]}}
    assert run(tmp_path, "gate", cfg) == EXIT_OK
    table = rows(tmp_path / "out" / "gate_zeno.csv")
    assert len(table) == 2
    assert table[0][:2] == ["T_in_inv_K", "p_Z_NA"]
    assert 0 <= float(table[1][1]) < 1e-3


def test_estimate_command(tmp_path):
    cfg = {"system": {"nbar": [4], "delta_over_K": [0]}, "estimate": {"n_cutoff": 10}}
    assert run(tmp_path, "estimate", cfg) == EXIT_OK
    table = rows(tmp_path / "out" / "estimate.csv")
    assert float(table[1][2]) > 0


def test_entry_point_module(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "detuned_kerr.cli", "spectrum", "--out", str(tmp_path), "--threads", "1"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "spectrum.csv").exists()
