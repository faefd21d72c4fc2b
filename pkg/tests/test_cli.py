import json
from pathlib import Path

import pytest

import vlasso as v
from vlasso import serialize
from vlasso.cli import load_experiment_config, main, parse_estimators

DATA = Path(__file__).parent / "data"
DESIGN = str(DATA / "design_8x12.csv")
DESIGN_BIN = str(DATA / "design_8x12.bin")
OBS = str(DATA / "obs_8x12.json")
FIXTURE_LAMBDA = "1.199828"


def run(argv):
    return main(argv)


class TestExitCodes:
    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["--help"])
        assert exc.value.code == 0
        assert "solve" in capsys.readouterr().out

    def test_missing_required_flag_is_usage_error(self, capsys):
        assert run(["solve", "--design", DESIGN]) == 1
        assert "error" in capsys.readouterr().err

    def test_unknown_config_key_is_usage_error(self, tmp_path, capsys):
        cfg = tmp_path / "mc.json"
        cfg.write_text(json.dumps({"p": 20, "n": 10, "s": 1, "bogus_key": 3}))
        assert run(["mc", "--config", str(cfg), "--out", str(tmp_path)]) == 1
        assert "bogus_key" in capsys.readouterr().err

    def test_numerical_failure_exits_two(self, capsys):
        code = run(["tune-b", "--design", DESIGN, "--obs", OBS, "--c", "1e15"])
        assert code == 2
        err_lines = capsys.readouterr().err.strip().splitlines()
        diag = json.loads(err_lines[-1])
        assert diag["error"] == "GammaRangeError"
        assert "attainable" in diag

    def test_missing_file(self, capsys):
        assert run(["solve", "--design", "nope.csv", "--obs", OBS,
                    "--lambda", "1.0"]) == 1


class TestSolve:
    def test_matches_golden_fixture(self, tmp_path, capsys):
        out = tmp_path / "sol.json"
        code = run(["solve", "--design", DESIGN, "--obs", OBS,
                    "--lambda", FIXTURE_LAMBDA, "--out", str(out)])
        assert code == 0
        got = json.loads(out.read_text())
        golden = json.loads((DATA / "golden_solution.json").read_text())
        assert got == golden

    def test_byte_identical_to_library_call(self, tmp_path):
        out = tmp_path / "sol.json"
        run(["solve", "--design", DESIGN_BIN, "--obs", OBS,
             "--lambda", FIXTURE_LAMBDA, "--out", str(out)])
        X = serialize.load_design(DESIGN_BIN)
        y = serialize.load_vector(OBS)
        sol = v.solve_lasso(X, y, float(FIXTURE_LAMBDA))
        direct = {"schema": serialize.SCHEMA_VERSION, "kind": "lasso_solution",
                  **sol.to_json()}
        assert out.read_text().strip() == json.dumps(direct, indent=2,
                                                     default=str)

    def test_export_path(self, tmp_path):
        dest = tmp_path / "path.csv"
        run(["solve", "--design", DESIGN, "--obs", OBS,
             "--lambda", FIXTURE_LAMBDA, "--out", str(tmp_path / "s.json"),
             "--export-path", str(dest)])
        header = dest.read_text().splitlines()[0]
        assert header == "segment,lambda_hi,lambda_lo,active,signs"

    def test_resolved_config_echoed(self, tmp_path, capsys):
        run(["solve", "--design", DESIGN, "--obs", OBS,
             "--lambda", FIXTURE_LAMBDA, "--out", str(tmp_path / "s.json")])
        err = capsys.readouterr().err
        assert "resolved_config" in err


class TestTuners:
    def test_tune_a_both_methods_agree(self, tmp_path):
        outs = []
        for method in ("fixed-point", "path"):
            dest = tmp_path / f"a_{method}.json"
            code = run(["tune-a", "--design", DESIGN, "--obs", OBS,
                        "--cvar", "2.0", "--method", method,
                        "--out", str(dest)])
            assert code == 0
            outs.append(json.loads(dest.read_text()))
        assert outs[0]["lambda_hat"] == pytest.approx(outs[1]["lambda_hat"],
                                                      rel=1e-6)
        assert outs[0]["cvar_admissible_interval"][0] > 0

    def test_tune_b_newton(self, tmp_path):
        dest = tmp_path / "b.json"
        code = run(["tune-b", "--design", DESIGN, "--obs", OBS,
                    "--c", "0.5", "--out", str(dest)])
        assert code == 0
        doc = json.loads(dest.read_text())
        assert doc["strategy"] == "b"
        assert doc["solution"]["kkt"]["valid"]

    def test_tune_a_warns_outside_admissible_interval(self, tmp_path, caplog):
        import logging
        with caplog.at_level(logging.WARNING, logger="vlasso"):
            run(["tune-a", "--design", DESIGN, "--obs", OBS,
                 "--cvar", "1e6", "--out", str(tmp_path / "a.json")])
        assert any("theoretical interval" in r.message for r in caplog.records)


class TestConstantsAndCheckMatrix:
    def test_constants_payload(self, tmp_path):
        dest = tmp_path / "c.json"
        code = run(["constants", "--alpha", "1.5", "--r", "0.5", "--c", "1.0",
                    "--n", "75", "--p", "600", "--s", "9",
                    "--design", DESIGN.replace("design_8x12.csv",
                                               "design_8x12.csv"),
                    "--out", str(dest)])
        assert code == 0
        doc = json.loads(dest.read_text())
        assert doc["C_mu"] == pytest.approx(0.2)
        assert doc["C_circ"] == pytest.approx(6529.87363, rel=1e-6)
        assert "bounds_b" in doc

    def test_constants_with_truth_report(self, tmp_path):
        dest = tmp_path / "c.json"
        code = run(["constants", "--alpha", "1.5", "--r", "0.5",
                    "--cvar", "8.0", "--n", "8", "--p", "12", "--s", "2",
                    "--design", DESIGN, "--truth", str(DATA / "truth_8x12.json"),
                    "--out", str(dest)])
        assert code == 0
        doc = json.loads(dest.read_text())
        assert "assumption_report" in doc
        assert set(doc["assumption_report"]) >= {"coherence_ok", "margins"}

    def test_check_matrix(self, tmp_path):
        dest = tmp_path / "m.json"
        code = run(["check-matrix", "--design", DESIGN, "--support", "0,3",
                    "--r", "0.5", "--out", str(dest)])
        assert code == 0
        doc = json.loads(dest.read_text())
        assert 0.0 < doc["coherence"] < 1.0
        assert doc["condition_v_margin"] == pytest.approx(
            0.5 - doc["gram_deviation"])


class TestMonteCarloCommand:
    def _config(self, tmp_path, text):
        cfg = tmp_path / "mc.cfg"
        cfg.write_text(text)
        return str(cfg)

    def test_json_config_run(self, tmp_path):
        cfg = self._config(tmp_path, json.dumps({
            "p": 30, "n": 15, "s": 2, "B": 10.0, "sigma": 1.0,
            "trials": 3, "master_seed": 1,
            "estimators": "lasso_known,strategy_a:cvar=2,strategy_b:C=0.5",
        }))
        outdir = tmp_path / "out"
        code = run(["mc", "--config", cfg, "--out", str(outdir),
                    "--format", "both", "--no-figures"])
        assert code == 0
        assert (outdir / "trials.csv").exists()
        assert (outdir / "histograms.csv").exists()
        assert (outdir / "report.json").exists()
        assert len((outdir / "trials.csv").read_text().strip().splitlines()) == 4

    def test_key_value_config_and_seed_override(self, tmp_path):
        cfg = self._config(tmp_path, "\n".join([
            "# tiny benchmark",
            "p=30", "n=15", "s=2", "B=10.0", "sigma=1.0",
            "trials=2", "master_seed=1",
            "estimators=lasso_known",
        ]))
        outdir = tmp_path / "out"
        code = run(["mc", "--config", cfg, "--out", str(outdir),
                    "--format", "json", "--seed", "99", "--no-figures"])
        assert code == 0
        doc = json.loads((outdir / "report.json").read_text())
        assert doc["config"]["master_seed"] == 99

    def test_global_seed_flag(self, tmp_path):
        cfg = self._config(tmp_path, "p=30\nn=15\ns=2\ntrials=1\n"
                                     "estimators=lasso_known\n")
        outdir = tmp_path / "out"
        code = run(["--seed", "123", "--threads", "1", "mc",
                    "--config", cfg, "--out", str(outdir),
                    "--format", "json", "--no-figures"])
        assert code == 0
        doc = json.loads((outdir / "report.json").read_text())
        assert doc["config"]["master_seed"] == 123

    def test_figures_rendered_by_default(self, tmp_path):
        cfg = self._config(tmp_path, json.dumps({
            "p": 30, "n": 15, "s": 2, "trials": 2,
            "estimators": "lasso_known",
        }))
        outdir = tmp_path / "out"
        code = run(["mc", "--config", cfg, "--out", str(outdir)])
        assert code == 0
        assert (outdir / "detections.png").stat().st_size > 0
        assert (outdir / "sigma_hat.png").stat().st_size > 0


class TestConfigParsing:
    def test_parse_estimators(self):
        specs = parse_estimators(
            "lasso_known:scale=2.5,strategy_a:cvar=4:method=path,strategy_b:C=2")
        assert specs[0].lambda_scale == 2.5
        assert specs[1].cvar == 4.0 and specs[1].method == "path"
        assert specs[2].C == 2.0

    def test_json_estimator_objects(self, tmp_path):
        cfg = tmp_path / "mc.json"
        cfg.write_text(json.dumps({
            "p": 20, "n": 10, "s": 1, "trials": 1,
            "estimators": [{"kind": "strategy_a", "cvar": 3.0,
                            "method": "path", "name": "ignored"}],
        }))
        parsed = load_experiment_config(str(cfg))
        assert parsed.estimators[0].cvar == 3.0
        assert parsed.p == 20
