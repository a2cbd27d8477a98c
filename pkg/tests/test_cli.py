"""Command-line interface, driven in-process through main(argv)."""

import numpy as np
import pytest

from confset import (
    evaluate_sets,
    load_csv,
    read_batch_csv,
    read_results,
    read_sets_csv,
)
from confset.cli import EXIT_CHECK, EXIT_DATA, EXIT_OK, main
from confset.validation import CHECKS, CheckResult


def run_cli(*argv):
    return main([str(a) for a in argv])


class TestSimulate:
    def test_multi_shorthand_and_counts(self, tmp_path, capsys):
        prefix = tmp_path / "demo"
        code = run_cli(
            "simulate", "--scenario", "multi", "--p", 200, "--nk", 200,
            "--m", 1000, "--seed", 7, "--out", prefix,
        )
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "multi_class: 800 training rows over 4 classes, p=200" in out
        assert "test batch: 1000 rows (750 inliers, 250 outliers)" in out

        data, label_map = load_csv(f"{prefix}_train.csv", "label")
        assert data.n == 800 and data.n_classes == 4 and data.n_features == 200
        batch = read_batch_csv(f"{prefix}_test.csv", truth_column="truth")
        assert batch.m == 1000
        assert int(np.sum(batch.truth == 5)) == 250

    def test_one_class_scenario(self, tmp_path, capsys):
        prefix = tmp_path / "oc"
        code = run_cli(
            "simulate", "--scenario", "one", "--p", 20, "--nk", 50,
            "--m", 40, "--out", prefix,
        )
        assert code == EXIT_OK
        assert "one_class: 50 training rows over 1 classes" in capsys.readouterr().out

    def test_same_seed_identical_files(self, tmp_path):
        for name in ("a", "b"):
            run_cli(
                "simulate", "--scenario", "multi", "--p", 10, "--nk", 20,
                "--m", 30, "--seed", 3, "--out", tmp_path / name,
            )
        for suffix in ("_train.csv", "_test.csv", "_oracle.json"):
            assert (tmp_path / f"a{suffix}").read_text() == (
                tmp_path / f"b{suffix}"
            ).read_text()

    def test_usage_error_is_exit_2(self):
        with pytest.raises(SystemExit) as exc:
            run_cli("simulate", "--scenario", "bogus", "--out", "x")
        assert exc.value.code == 2


@pytest.fixture
def simulated(tmp_path):
    prefix = tmp_path / "sim"
    run_cli(
        "simulate", "--scenario", "one", "--p", 30, "--nk", 99,
        "--m", 60, "--seed", 11, "--out", prefix,
    )
    return prefix


class TestPredict:
    def test_outputs_and_threshold(self, simulated, tmp_path, capsys):
        prefix = tmp_path / "pred"
        code = run_cli(
            "predict", "--train", f"{simulated}_train.csv",
            "--test", f"{simulated}_test.csv", "--truth-column", "truth",
            "--alpha", 0.05, "--out", prefix,
        )
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "predicted 60 rows over 1 classes at alpha=0.05 (empirical)" in out

        # n_k = 99: the acceptance cut at alpha=0.05 lands exactly on 0.05
        lines = (tmp_path / "pred_thresholds.csv").read_text().splitlines()
        assert lines[0] == "class,threshold,alpha"
        assert lines[1] == "1,0.05,0.05"

        rows = (tmp_path / "pred_pvalues.csv").read_text().splitlines()
        assert rows[0] == "index,raw_1,adjusted_1"
        assert len(rows) == 61

        sets = read_sets_csv(f"{prefix}_sets.csv", n_classes=1)
        assert sets.m == 60

    def test_single_row_batch_skips_adjustment(self, simulated, tmp_path):
        # carve a one-row test file out of the simulated batch
        src = open(f"{simulated}_test.csv").read().splitlines()
        one = tmp_path / "one.csv"
        one.write_text("\n".join(src[:2]) + "\n")
        code = run_cli(
            "predict", "--train", f"{simulated}_train.csv",
            "--test", one, "--truth-column", "truth",
            "--out", tmp_path / "single",
        )
        assert code == EXIT_OK
        rows = (tmp_path / "single_pvalues.csv").read_text().splitlines()
        assert len(rows) == 2
        _, raw, adjusted = rows[1].split(",")
        assert raw == adjusted  # one test point, nothing to adjust over

    def test_oracle_mode(self, simulated, tmp_path, capsys):
        code = run_cli(
            "predict", "--train", f"{simulated}_train.csv",
            "--test", f"{simulated}_test.csv", "--truth-column", "truth",
            "--mode", "oracle", "--oracle-params", f"{simulated}_oracle.json",
            "--out", tmp_path / "orc",
        )
        assert code == EXIT_OK
        assert "(oracle)" in capsys.readouterr().out

    def test_oracle_mode_needs_params(self, simulated, tmp_path, capsys):
        code = run_cli(
            "predict", "--train", f"{simulated}_train.csv",
            "--test", f"{simulated}_test.csv", "--mode", "oracle",
            "--out", tmp_path / "x",
        )
        assert code == EXIT_DATA
        assert "--oracle-params" in capsys.readouterr().err

    def test_oracle_shape_mismatch(self, simulated, tmp_path, capsys):
        other = tmp_path / "other"
        run_cli(
            "simulate", "--scenario", "multi", "--p", 30, "--nk", 10,
            "--m", 8, "--out", other,
        )
        code = run_cli(
            "predict", "--train", f"{simulated}_train.csv",
            "--test", f"{simulated}_test.csv", "--mode", "oracle",
            "--oracle-params", f"{other}_oracle.json", "--out", tmp_path / "x",
        )
        assert code == EXIT_DATA
        assert "4 classes" in capsys.readouterr().err

    def test_missing_file_is_data_error(self, tmp_path, capsys):
        code = run_cli(
            "predict", "--train", tmp_path / "nope.csv",
            "--test", tmp_path / "nope.csv", "--out", tmp_path / "x",
        )
        assert code == EXIT_DATA


class TestEvaluate:
    def test_matches_library(self, simulated, tmp_path, capsys):
        run_cli(
            "predict", "--train", f"{simulated}_train.csv",
            "--test", f"{simulated}_test.csv", "--truth-column", "truth",
            "--alpha", 0.1, "--out", tmp_path / "pred",
        )
        capsys.readouterr()
        code = run_cli(
            "evaluate", "--sets", tmp_path / "pred_sets.csv",
            "--test", f"{simulated}_test.csv", "--n-classes", 1,
            "--out", tmp_path / "metrics.csv",
        )
        assert code == EXIT_OK
        table = read_results(tmp_path / "metrics.csv")

        sets = read_sets_csv(tmp_path / "pred_sets.csv", 1)
        batch = read_batch_csv(f"{simulated}_test.csv", truth_column="truth")
        want = evaluate_sets(sets, batch.truth)
        assert table["power"][0] == want.power
        assert table["coverage"][0] == want.coverage
        assert table["fdr"][0] == want.fdr

    def test_prints_table_without_out(self, simulated, tmp_path, capsys):
        run_cli(
            "predict", "--train", f"{simulated}_train.csv",
            "--test", f"{simulated}_test.csv", "--truth-column", "truth",
            "--out", tmp_path / "pred",
        )
        capsys.readouterr()
        code = run_cli(
            "evaluate", "--sets", tmp_path / "pred_sets.csv",
            "--test", f"{simulated}_test.csv", "--n-classes", 1,
        )
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "[1 runs]" in out and "ambiguity" in out

    def test_row_count_mismatch(self, simulated, tmp_path, capsys):
        run_cli(
            "predict", "--train", f"{simulated}_train.csv",
            "--test", f"{simulated}_test.csv", "--truth-column", "truth",
            "--out", tmp_path / "pred",
        )
        short = tmp_path / "short.csv"
        short.write_text("x1,truth\n0.0,1\n")
        code = run_cli(
            "evaluate", "--sets", tmp_path / "pred_sets.csv",
            "--test", short, "--n-classes", 1,
        )
        assert code == EXIT_DATA


class TestExperiment:
    def test_runs_config_with_overrides(self, tmp_path, capsys):
        config = tmp_path / "config.yaml"
        config.write_text(
            "scenario: multi_class\np: [6]\nn_k: [12]\nrho: [0.0]\n"
            "m: 16\nalpha: 0.1\nreplicates: 2\ntest_sets: 2\n"
            f"out_dir: {tmp_path / 'ignored'}\n"
        )
        out_dir = tmp_path / "actual"
        code = run_cli(
            "experiment", "--config", config, "--out-dir", out_dir,
            "--workers", 2,
        )
        assert code == EXIT_OK
        assert "== multi_class_p6_nk12_rho0_empirical ==" in capsys.readouterr().out
        assert (out_dir / "multi_class_p6_nk12_rho0_empirical.csv").exists()
        assert not (tmp_path / "ignored").exists()
        table = read_results(out_dir / "multi_class_p6_nk12_rho0_empirical.csv")
        assert "time_s" in table

    def test_mode_override(self, tmp_path, capsys):
        config = tmp_path / "config.yaml"
        config.write_text(
            "scenario: one_class\np: [5]\nn_k: [10]\nm: 8\n"
            "replicates: 2\ntest_sets: 1\n"
            f"out_dir: {tmp_path / 'out'}\n"
        )
        code = run_cli("experiment", "--config", config, "--mode", "both")
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "_empirical ==" in out and "_oracle ==" in out

    def test_bad_config_is_data_error(self, tmp_path, capsys):
        config = tmp_path / "config.yaml"
        config.write_text("scenario: one_class\nbanana: 1\n")
        assert run_cli("experiment", "--config", config) == EXIT_DATA
        assert "banana" in capsys.readouterr().err


class TestValidate:
    def test_single_cheap_check(self, capsys):
        code = run_cli("validate", "--check", "scw", "--trials", 2000)
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("[PASS] scw")
        assert "all 1 checks passed" in out

    def test_comma_separated_checks(self, capsys):
        code = run_cli(
            "validate", "--check", "scw,construction", "--trials", 20000
        )
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "[PASS] scw" in out and "[PASS] construction" in out
        assert "all 2 checks passed" in out

    def test_coverage_at_half_alpha(self, capsys):
        # alpha = 0.5 still yields >= 1 - alpha coverage
        code = run_cli(
            "validate", "--check", "coverage", "--alpha", 0.5,
            "--nk", 200, "--draws", 400, "--p", 20,
        )
        assert code == EXIT_OK
        assert "coverage 0." in capsys.readouterr().out

    def test_unknown_check_is_data_error(self, capsys):
        assert run_cli("validate", "--check", "bogus") == EXIT_DATA
        assert "bogus" in capsys.readouterr().err

    def test_failing_check_is_exit_4(self, capsys):
        # inject a stub check; cli and validation share the registry object
        def always_fails(seed=0):
            return CheckResult(
                name="stub", passed=False, details="forced", elapsed_s=0.0
            )

        CHECKS["stub"] = always_fails
        try:
            code = run_cli("validate", "--check", "stub")
        finally:
            del CHECKS["stub"]
        assert code == EXIT_CHECK
        captured = capsys.readouterr()
        assert "[FAIL] stub" in captured.out
        assert "1 check(s) failed: stub" in captured.err

    def test_no_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            run_cli()
        assert exc.value.code == 2
