from __future__ import annotations

import json

import numpy as np
import pytest

from gmqaoa import cli, fullsim, problems, verify


@pytest.fixture
def files(tmp_path):
    paths = {}
    paths["tsp3"] = tmp_path / "tsp3.json"
    paths["tsp3"].write_text(json.dumps({"problem": "tsp", "dist": [[0, 1, 3], [1, 0, 2], [3, 2, 0]],
                                         "fixed_first_city": False}))
    paths["p4"] = tmp_path / "p4.json"
    paths["p4"].write_text(json.dumps({"problem": "kvc", "n": 4, "edges": [[0, 1], [1, 2], [2, 3]], "k": 2}))
    paths["edges"] = tmp_path / "p4.txt"
    paths["edges"].write_text("0 1\n1 2\n2 3\n")
    paths["bad"] = tmp_path / "bad.json"
    paths["bad"].write_text('{"problem": "kvc",\n  "n": 4, "edges": [[0, 1] [1, 2]], "k": 2}')
    paths["big"] = tmp_path / "big.json"
    paths["big"].write_text(json.dumps({"problem": "tsp", "dist": np.zeros((9, 9)).tolist()}))
    paths["portfolio"] = tmp_path / "pf.json"
    paths["portfolio"].write_text(json.dumps({"problem": "portfolio", "n": 3, "d": 1, "penalty": 1.0,
                                              "mu": [0.2, -0.1, 0.3]}))
    return paths


class TestPrepare:
    def test_tsp3(self, files, tmp_path, capsys):
        out = tmp_path / "c.txt"
        assert cli.main(["prepare", "--problem", str(files["tsp3"]), "--out", str(out)]) == 0
        assert "|F|=6" in capsys.readouterr().out
        circ = fullsim.Circuit.from_text(out.read_text())
        assert circ.num_qubits == 9

    def test_stdout_dump(self, files, capsys):
        assert cli.main(["prepare", "--problem", str(files["p4"])]) == 0
        text = capsys.readouterr().out
        assert "QUBITS 4" in text and "DICKE" in text

    def test_alternating(self, files, capsys):
        assert cli.main(["prepare", "--problem", str(files["tsp3"]), "--method", "alternating"]) == 0
        assert "|F|=3" in capsys.readouterr().out

    def test_wrong_method(self, files):
        assert cli.main(["prepare", "--problem", str(files["p4"]), "--method", "permutation"]) == 1

    def test_malformed_json(self, files, capsys):
        assert cli.main(["prepare", "--problem", str(files["bad"])]) == 1
        assert "line 2 column" in capsys.readouterr().err

    def test_cap(self, files, capsys):
        assert cli.main(["prepare", "--problem", str(files["big"])]) == 2
        assert "n <= 8" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert cli.main(["prepare", "--problem", str(tmp_path / "nope.json")]) == 1


class TestRun:
    def test_p0_mean_and_ratio(self, files, tmp_path, capsys):
        out = tmp_path / "o"
        assert cli.main(["run", "--problem", str(files["p4"]), "--p", "0", "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["expectation"] == pytest.approx(2.5)
        assert report["brute_force_optimum"] == 3.0
        assert report["ratio"] == pytest.approx(2.5 / 3)
        assert capsys.readouterr().out.strip() == "best=2.5 ratio=0.833333333333 p=0 evals=1"

    def test_deterministic_outputs(self, files, tmp_path):
        args = ["run", "--problem", str(files["portfolio"]), "--p", "1", "--optimizer", "simplex",
                "--seed", "42", "--engine", "both"]
        assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
        assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
        for name in ("report.json", "trace.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_engine_both_reports_cross_check(self, files, tmp_path):
        out = tmp_path / "o"
        assert cli.main(["run", "--problem", str(files["tsp3"]), "--p", "1", "--optimizer", "grid",
                         "--resolution", "6", "--engine", "both", "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        inst = problems.load_instance(files["tsp3"])
        from gmqaoa import stateprep
        from gmqaoa.substate import AngleSchedule
        expected = verify.cross_check_engines(stateprep.prep_for(inst), problems.encoding(inst),
                                              AngleSchedule(report["gamma"], report["beta"]))
        assert report["cross_check_deviation"] == expected < 1e-8
        assert report["full_engine"]["leaked"] < 1e-10

    def test_csv_header(self, files, tmp_path):
        out = tmp_path / "o"
        cli.main(["run", "--problem", str(files["p4"]), "--p", "2", "--optimizer", "grid",
                  "--resolution", "3", "--out", str(out)])
        lines = (out / "trace.csv").read_text().splitlines()
        assert lines[0] == "p,gamma1,gamma2,beta1,beta2,expectation,opt_prob"
        assert len(lines) == 82

    def test_edge_list_with_k(self, files, tmp_path, capsys):
        assert cli.main(["run", "--problem", str(files["edges"]), "--k", "2", "--p", "1",
                         "--out", str(tmp_path / "o")]) == 0
        assert capsys.readouterr().out.startswith("best=3 ratio=1 p=1")

    def test_budget_exceeded(self, files, tmp_path):
        assert cli.main(["run", "--problem", str(files["p4"]), "--p", "2", "--optimizer", "grid",
                         "--resolution", "40", "--budget", "1000", "--out", str(tmp_path / "o")]) == 2

    def test_statevector_cap_env(self, files, tmp_path, monkeypatch):
        monkeypatch.setenv("GMQAOA_MAX_AMPS", "64")
        assert cli.main(["run", "--problem", str(files["tsp3"]), "--p", "1", "--optimizer", "grid",
                         "--resolution", "2", "--engine", "full", "--out", str(tmp_path / "o")]) == 2
        assert not (tmp_path / "o").exists()

    def test_negative_p(self, files, tmp_path):
        assert cli.main(["run", "--problem", str(files["p4"]), "--p", "-1", "--out", str(tmp_path)]) == 1

    def test_bad_seed(self, files):
        with pytest.raises(SystemExit):
            cli.main(["run", "--problem", str(files["p4"]), "--seed", "-5"])


class TestVerify:
    def test_unknown_suite(self, capsys):
        assert cli.main(["verify", "--suite", "nope"]) == 1
        err = capsys.readouterr().err
        assert "theorem1" in err and "engines" in err

    def test_theorem1_trials(self, tmp_path):
        out = tmp_path / "v.json"
        assert cli.main(["verify", "--suite", "theorem1", "--trials", "4", "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        checks = report["suites"]["theorem1"]["checks"]
        assert all("mean_spread" in c["detail"] for c in checks)
        assert checks[0]["detail"]["schedules"] == 12

    def test_failure_exit_code(self, monkeypatch):
        monkeypatch.setitem(verify.SUITES, "mcz", lambda: [verify.Check("mcz/x", False, 1.0, 1e-9)])
        assert cli.main(["verify", "--suite", "mcz"]) == 3

    def test_default_suites_known(self):
        assert set(verify.DEFAULT_SUITES) <= set(verify.SUITES)
