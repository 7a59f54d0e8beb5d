"""Command line driver: reports, CSV schema, config precedence, exit codes."""
import csv
import json

import pytest

from circle_lab import cli

from conftest import OMEGA


def run(tmp_path, *argv):
    out = tmp_path / "out"
    rc = cli.main(list(argv) + ["--out", str(out)])
    report = json.loads((out / "report.json").read_text())
    return rc, report, out


def test_registry_covers_all_experiments():
    assert set(cli.EXPERIMENTS) == {
        "rotnum", "partition", "realbounds", "automorphic", "agreement",
        "lyapunov", "sigma", "omega-scan", "cobound", "dk", "denjoy",
    }
    for exp in cli.EXPERIMENTS.values():
        assert exp.help
        names = [o.name for o in exp.options]
        assert len(names) == len(set(names))


def test_partition_report_and_csv(tmp_path):
    rc, report, out = run(tmp_path, "partition", "--family", "rotation",
                          "--level", "6")
    assert rc == 0
    assert report["schema"] == "circle-lab report v1"
    assert report["experiment"] == "partition"
    assert all(v["status"] == "pass" for v in report["verdicts"])
    assert "atoms.csv" in report["csv_files"]
    with open(out / "atoms.csv") as fh:
        header = fh.readline()
        assert header == "# circle-lab csv v1 partition/atoms\n"
        rows = list(csv.reader(fh))
    # column row plus one row per atom at level 6
    assert len(rows) == 1 + 13 + 21
    assert rows[0] == ["start", "length", "kind", "iterate"]


def test_rotnum_on_rigid_rotation(tmp_path):
    rc, report, _ = run(tmp_path, "rotnum", "--family", "rotation")
    assert rc == 0
    assert report["results"]["converged"]
    assert report["results"]["value"] == pytest.approx(0.6180339887498949,
                                                       abs=1e-9)


def test_automorphic_rotation_cross_checks(tmp_path):
    rc, report, out = run(tmp_path, "automorphic", "--family", "rotation",
                          "--base-point", "0.0", "--orbit-level", "14",
                          "--bins", "512", "--iters", "300",
                          "--compare-bins", "32")
    assert rc == 0
    names = {v["name"] for v in report["verdicts"]}
    assert {"telescoping_identity", "solver_defect", "orbit_vs_solver_l1",
            "orbit_vs_uniform_l1"} <= names
    assert (out / "density.csv").exists()
    assert (out / "cesaro_deltas.csv").exists()


def test_cobound_defect_decay_on_sine_map(tmp_path):
    rc, report, _ = run(tmp_path, "cobound", "--omega", str(OMEGA),
                        "--levels", "6,8", "--grid", "512")
    assert rc == 0
    levels = report["results"]["levels"]
    assert [e["level"] for e in levels] == [6, 8]
    assert levels[1]["defect_sup"] < levels[0]["defect_sup"]
    assert report["results"]["decaying"]


def test_sigma_on_rotation_counts_steps(tmp_path):
    rc, report, _ = run(tmp_path, "sigma", "--family", "rotation",
                        "--N", "500")
    assert rc == 0
    # unit derivative: the series is the step count, growth is tenfold
    assert report["results"]["min_growth"] == pytest.approx(501.0 / 51.0,
                                                            rel=1e-12)
    assert "preimage" not in report["results"]


def test_lyapunov_on_rotation_is_exactly_zero(tmp_path):
    rc, report, _ = run(tmp_path, "lyapunov", "--family", "rotation",
                        "--level", "10", "--grid", "256")
    assert rc == 0
    assert report["results"]["c1hat"] == 1.0
    assert report["results"]["worst_abs_value"] == 0.0


def test_denjoy_small_run(tmp_path):
    rc, report, _ = run(tmp_path, "denjoy", "--N", "300",
                        "--gap-steps", "120")
    assert rc == 0
    byname = {v["name"]: v["status"] for v in report["verdicts"]}
    for key in ("intervals_disjoint", "semiconjugacy", "invariance_defect",
                "distribution_two_route", "gap_average_vanishes",
                "seam_decay_on_doubling"):
        assert byname[key] == "pass"


def test_config_file_with_flag_override(tmp_path):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({"level": 5, "family": "rotation"}))
    out = tmp_path / "a"
    rc = cli.main(["partition", "--config", str(cfgfile), "--out", str(out)])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["level"] == 5
    # a command line flag wins over the config file
    out2 = tmp_path / "b"
    rc = cli.main(["partition", "--config", str(cfgfile), "--level", "6",
                   "--out", str(out2)])
    assert rc == 0
    report2 = json.loads((out2 / "report.json").read_text())
    assert report2["config"]["level"] == 6


def test_unknown_config_key_is_rejected(tmp_path):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(SystemExit, match="unknown config key"):
        cli.main(["partition", "--config", str(cfgfile),
                  "--out", str(tmp_path / "x")])


def test_invalid_choice_is_rejected(tmp_path):
    with pytest.raises(SystemExit):
        cli.main(["dk", "--phi", "tan1", "--out", str(tmp_path / "x")])


def test_failing_verdict_sets_exit_code(tmp_path):
    # an orbit this short cannot fill 32 bins uniformly
    rc, report, _ = run(tmp_path, "automorphic", "--family", "rotation",
                        "--base-point", "0.0", "--orbit-level", "10",
                        "--bins", "512", "--iters", "300",
                        "--compare-bins", "32")
    assert rc == 1
    failed = [v["name"] for v in report["verdicts"] if v["status"] == "fail"]
    assert "orbit_vs_uniform_l1" in failed
