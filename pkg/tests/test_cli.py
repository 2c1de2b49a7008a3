"""Command-line interface: parsing, config merging, exit codes, artifacts."""

import json

import pytest

from ifem.cli import (
    EXIT_CONFIG,
    EXIT_GEOMETRY,
    EXIT_OK,
    main,
)


def test_solve_prints_error_report(capsys):
    assert main(["solve", "--method", "hybrid", "--n", "8"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "method=hybrid N=8 p=0.1" in out
    assert "e0h" in out and "e1h" in out
    assert "constraint_residual" in out


def test_solve_defaults_to_hybrid(capsys):
    assert main(["solve", "--n", "6"]) == EXIT_OK
    assert "method=hybrid" in capsys.readouterr().out


def test_patch_test_flag(capsys):
    assert main(["solve", "--patch-test", "--method", "standard", "--n", "8"]) == EXIT_OK
    assert "[PASS]" in capsys.readouterr().out


def test_convergence_writes_tables(tmp_path, capsys):
    code = main(
        [
            "convergence",
            "--method",
            "fitted",
            "--n-list",
            "4,8",
            "--alpha",
            "1",
            "--beta",
            "10",
            "--out",
            str(tmp_path),
            "--format",
            "md",
        ]
    )
    assert code == EXIT_OK
    assert (tmp_path / "convergence_fitted_p0.1.csv").exists()
    md = (tmp_path / "convergence_fitted_p0.1.md").read_text()
    assert "| 1/h |" in md
    out = capsys.readouterr().out
    assert "| 8 |" in out
    csv = (tmp_path / "convergence_fitted_p0.1.csv").read_text()
    assert csv.splitlines()[0] == "method,p,N,e0h,rate0h,e0inf,rateinf,e1h,rate1h"


def test_config_file_merging(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"method": "fitted", "n": 4}))
    dump = tmp_path / "effective.json"
    # The flag overrides the file's n; the file's method survives.
    code = main(
        ["solve", "--config", str(cfg), "--n", "6", "--dump-config", str(dump)]
    )
    assert code == EXIT_OK
    assert "method=fitted N=6" in capsys.readouterr().out
    effective = json.loads(dump.read_text())
    assert effective["method"] == "fitted"
    assert effective["n"] == 6


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"granularity": 12}))
    assert main(["solve", "--config", str(cfg)]) == EXIT_CONFIG
    assert "granularity" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--n", "0"],
        ["solve", "--alpha", "-1"],
        ["solve", "--r1", "1.5"],
        ["convergence", "--n-list", "4,8,12"],
        ["solve", "--cg-tol", "2.0"],
    ],
)
def test_config_validation_exit_code(argv, capsys):
    assert main(argv) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_geometry_error_exit_code(capsys):
    # A circle through the domain boundary cannot be meshed.
    assert main(["solve", "--n", "8", "--cx", "0.6"]) == EXIT_GEOMETRY
    assert "geometry error" in capsys.readouterr().err


def test_verify_passes(capsys):
    assert main(["verify"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "all checks passed" in out
    assert "FAIL " not in out


def test_mesh_info(tmp_path, capsys):
    dump = tmp_path / "mesh.txt"
    assert main(["mesh-info", "--n", "10", "--out", str(dump)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "cut_two_edges" in out
    assert "|E_gamma| = 34" in out
    assert dump.exists()


def test_solution_dump(tmp_path, capsys):
    out_file = tmp_path / "solution.txt"
    assert main(["solve", "--n", "6", "--out", str(out_file)]) == EXIT_OK
    text = out_file.read_text()
    assert text.startswith("vertex_values 49")
