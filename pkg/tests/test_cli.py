import csv
import json
import subprocess
import sys

import pytest

from relaxedbell.cli import main
from relaxedbell.model import PAIRS


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out) if out.strip() else None, err


def write_box(capsys, tmp_path, *argv, name="box.json"):
    path = tmp_path / name
    code, _, _ = run(capsys, "box", *argv, "-o", str(path))
    assert code == 0
    return path


class TestAnalyze:
    def test_pr_box(self, capsys, tmp_path):
        path = write_box(capsys, tmp_path, "--kind", "pr")
        code, out, err = run_json(capsys, "analyze", str(path))
        assert code == 0
        assert out["chsh"]["value"] == 4.0
        assert out["B"] == 4.0
        assert out["verdict"]["pass"] is True
        assert out["measures"]["I"] == 0.5 and out["measures"]["S"] == 0.0
        assert "CHSH=4" in err

    def test_deterministic(self, capsys, tmp_path):
        path = write_box(capsys, tmp_path, "--kind", "deterministic", "--outcomes", "1,1,1,-1")
        code, out, _ = run_json(capsys, "analyze", str(path))
        assert code == 0
        assert out["chsh"]["value"] == 2.0
        assert (out["measures"]["I"], out["measures"]["S"], out["measures"]["M"]) == (0.0, 0.0, 0.0)

    def test_nosignal_round_trip(self, capsys, tmp_path):
        path = write_box(capsys, tmp_path, "--kind", "nosignal", "--I", "0.25")
        _, out, _ = run_json(capsys, "analyze", str(path))
        assert out["chsh"]["value"] == 3.0
        assert out["verdict"]["equality"] is True

    def test_signalling_zero(self, capsys, tmp_path):
        path = write_box(capsys, tmp_path, "--kind", "signalling", "--I", "0")
        _, out, _ = run_json(capsys, "analyze", str(path))
        assert (out["measures"]["I"], out["measures"]["S"]) == (0.0, 1.0)
        assert out["chsh"]["value"] == 4.0

    def test_malformed_json(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "lambdas": [,]\n}\n')
        code, out, err = run(capsys, "analyze", str(path))
        assert code == 2 and out == ""
        assert "line 2" in err

    def test_invalid_model(self, capsys, tmp_path):
        path = tmp_path / "neg.json"
        dists = {p.key: [0.5, 0.5, 0.0, 0.0] for p in PAIRS}
        dists["XpY"] = [1.1, -0.1, 0.0, 0.0]
        weights = {p.key: 1.0 for p in PAIRS}
        path.write_text(json.dumps({"lambdas": [{"label": "a", "weights": weights, "dists": dists}]}))
        code, _, err = run(capsys, "analyze", str(path))
        assert code == 2
        assert "XpY" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "analyze", str(tmp_path / "nope.json"))
        assert code == 1 and "I/O" in err

    def test_measurement_dependent_model(self, capsys, tmp_path):
        u = [0.25] * 4
        raw = {
            "lambdas": [
                {"label": "a", "weights": {"XY": 1, "XpY": 0.5, "XYp": 0.5, "XpYp": 0}, "dists": {p.key: u for p in PAIRS}},
                {"label": "b", "weights": {"XY": 0, "XpY": 0.5, "XYp": 0.5, "XpYp": 1}, "dists": {p.key: u for p in PAIRS}},
            ]
        }
        path = tmp_path / "md.json"
        path.write_text(json.dumps(raw))
        code, out, err = run_json(capsys, "analyze", str(path))
        assert code == 0
        assert out["verdict"] is None
        assert out["measures"]["M"] == 2.0
        assert "warning" in err

    def test_byte_identical_runs(self, capsys, tmp_path):
        path = write_box(capsys, tmp_path, "--kind", "nosignal", "--I", "0.1", "--flip")
        first = run(capsys, "analyze", str(path))[1]
        second = run(capsys, "analyze", str(path))[1]
        assert first == second


class TestBox:
    def test_stdout(self, capsys):
        code, out, _ = run_json(capsys, "box", "--kind", "pr")
        assert code == 0
        assert len(out["lambdas"]) == 1

    def test_bad_I(self, capsys):
        code, _, err = run(capsys, "box", "--kind", "nosignal", "--I", "0.7")
        assert code == 2 and "invalid input" in err

    def test_bad_kind(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["box", "--kind", "weird"])
        assert exc.value.code == 2


class TestOracleCommand:
    def test_single_cell(self, capsys):
        code, out, _ = run_json(capsys, "oracle", "--I", "0.25", "--S", "0")
        assert code == 0
        assert out["max_E"] == 3.0 and out["gap"] == 0.0

    def test_sweep_with_csv(self, capsys, tmp_path):
        path = tmp_path / "sweep.csv"
        code, out, _ = run_json(capsys, "oracle", "--I", "0,0.2", "--S", "0,0.6", "--csv", str(path))
        assert code == 0
        assert len(out["cells"]) == 4 and out["max_gap"] == 0.0
        rows = list(csv.DictReader(path.open()))
        assert [float(r["max_E"]) for r in rows] == [2.0, 2.0, 2.8, 4.0]

    def test_out_of_range(self, capsys):
        code, _, _ = run(capsys, "oracle", "--I", "0.7", "--S", "0")
        assert code == 2


class TestSingletCommand:
    def test_estimate(self, capsys, tmp_path):
        path = tmp_path / "corr.csv"
        code, out, _ = run_json(capsys, "singlet", "--w", "0.5", "--samples", "20000", "--seed", "1", "--csv", str(path))
        assert code == 0
        assert out["I"] == 0.25 and out["S"] == 0.5 and out["S_plus_2I"] == 1.0
        assert abs(out["chsh_analytic"]) == pytest.approx(2.82842712475, abs=1e-9)
        assert len(list(csv.DictReader(path.open()))) == 4

    def test_custom_settings(self, capsys):
        code, out, _ = run_json(capsys, "singlet", "--samples", "1000", "--settings", "0,45,90:30")
        assert code == 0
        assert len(out["correlators"]) == 3
        assert "chsh_estimate" not in out

    def test_bad_settings(self, capsys, tmp_path):
        assert run(capsys, "singlet", "--samples", "10", "--settings", "0,90:")[0] == 2
        # no colon means a settings file
        assert run(capsys, "singlet", "--samples", "10", "--settings", str(tmp_path / "none.json"))[0] == 1

    def test_settings_file(self, capsys, tmp_path):
        path = tmp_path / "settings.json"
        path.write_text(json.dumps({"first": [0, [0, 0, 2]], "second": [90]}))
        code, out, _ = run_json(capsys, "singlet", "--samples", "1000", "--settings", str(path))
        assert code == 0
        assert [r["analytic"] for r in out["correlators"]] == pytest.approx([0.0, 0.0], abs=1e-12)

    def test_scan(self, capsys):
        code, out, err = run_json(capsys, "singlet", "--scan", "--perturbed", "30", "--w-grid", "0,0.5,1")
        assert code == 0
        assert out["evidence_only"] is True
        assert out["counterexample_found"] is False
        assert "evidence only" in err

    def test_seeded_output_identical(self, capsys):
        argv = ("singlet", "--w", "1", "--samples", "5000", "--seed", "4")
        assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


class TestSmallCommands:
    def test_thresholds(self, capsys):
        code, out, _ = run_json(capsys, "thresholds", "--V", "0.8284")
        assert code == 0
        assert out["I_V"] == pytest.approx(0.2071, abs=1e-4)
        assert out["S_V"] == pytest.approx(0.5858, abs=1e-4)
        assert out["H_V"] == pytest.approx(0.736, abs=1e-3)
        assert out["C_V"] == pytest.approx(0.264, abs=1e-3)

    def test_info(self, capsys):
        code, out, _ = run_json(capsys, "info", "--V", "1", "--I", "0.25", "--S", "0.5")
        assert code == 0
        assert set(out) == {"V", "H_V", "C_V", "H_of_I", "C_of_S"}

    def test_thresholds_range(self, capsys):
        assert run(capsys, "thresholds", "--V", "3")[0] == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "relaxedbell", "thresholds", "--V", "1"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["I_V"] == 0.25
