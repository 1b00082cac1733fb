"""CLI tests: subcommand wiring, artifacts on disk, and exit codes."""

import os

import numpy as np
import pytest

import rcfgan.cli as cli
from rcfgan.cli import main
from rcfgan.train import TrainingDiverged

TINY = ("hidden = 16\nbatch_data = 8\nbatch_gen = 8\n"
        "batch_freq = 8\nbatch_sigma = 8\ncheckpoint_interval = 0\n")


def write_tiny_config(tmp_path, extra=""):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY + extra)
    return str(path)


class TestTrainCommand:
    def test_tiny_run_writes_artifacts(self, tmp_path):
        out = str(tmp_path / "run")
        code = main(["train", "--config", write_tiny_config(tmp_path),
                     "--dataset", "ring8", "--iterations", "3",
                     "--out", out, "--quiet"])
        assert code == 0
        names = set(os.listdir(out))
        assert {"config.txt", "telemetry.csv", "checkpoint_final.ckpt",
                "modes.csv", "scatter.png", "README.txt"} <= names
        with open(os.path.join(out, "config.txt")) as fh:
            body = fh.read()
        assert "iterations = 3" in body
        assert "dataset = ring8" in body

    def test_unknown_dataset_is_usage_error(self, tmp_path, capsys):
        code = main(["train", "--dataset", "ring9", "--iterations", "1",
                     "--out", str(tmp_path / "x"), "--quiet"])
        assert code == 2
        assert "config error" in capsys.readouterr().err

    def test_bad_config_file_is_usage_error(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("learning_rate = fast\n")
        code = main(["train", "--config", str(cfg),
                     "--out", str(tmp_path / "x"), "--quiet"])
        assert code == 2

    def test_missing_config_file_is_usage_error(self, tmp_path):
        code = main(["train", "--config", str(tmp_path / "nope.cfg"),
                     "--out", str(tmp_path / "x"), "--quiet"])
        assert code == 2

    def test_divergence_exit_code_and_dump(self, tmp_path, monkeypatch):
        def explode(*args, **kwargs):
            raise TrainingDiverged("critic loss went non-finite at "
                                   "iteration 2", [(1, 1.0, 1.0, 1.0, 1.0)])
        monkeypatch.setattr(cli, "train", explode)
        out = str(tmp_path / "run")
        code = main(["train", "--dataset", "ring8", "--iterations", "5",
                     "--out", out, "--quiet"])
        assert code == 3
        with open(os.path.join(out, "divergence.txt")) as fh:
            assert "non-finite" in fh.read()

    def test_idx_dataset_path(self, tmp_path):
        from rcfgan.datasets import synthetic_digits, write_idx
        ds = synthetic_digits((1, 2), 40, np.random.default_rng(0))
        ip, lp = str(tmp_path / "i.idx"), str(tmp_path / "l.idx")
        write_idx(ds, ip, lp)
        out = str(tmp_path / "run")
        code = main(["train", "--config", write_tiny_config(tmp_path),
                     "--dataset", f"idx:{ip},{lp}", "--iterations", "2",
                     "--out", out, "--quiet"])
        assert code == 0
        assert "telemetry.csv" in os.listdir(out)

    def test_malformed_idx_spec_is_usage_error(self, tmp_path):
        code = main(["train", "--dataset", "idx:only_images.idx",
                     "--out", str(tmp_path / "x"), "--quiet"])
        assert code == 2


class TestValidateMetricCommand:
    def test_quick_passes(self, tmp_path, capsys):
        out = str(tmp_path / "vm")
        code = main(["validate-metric", "--quick", "--out", out])
        assert code == 0
        printed = capsys.readouterr().out
        assert "symmetry" in printed and "FAIL" not in printed
        assert os.path.exists(os.path.join(out, "report.csv"))

    def test_injected_fault_is_caught(self, tmp_path, capsys):
        code = main(["validate-metric", "--quick", "--inject-fault",
                     "--out", str(tmp_path / "vm"), "--quiet"])
        assert code == 1
        assert "failed suites" in capsys.readouterr().err


class TestSwapCommand:
    def test_synthetic_swap_passes_check(self, tmp_path):
        out = str(tmp_path / "swap")
        code = main(["swap", "--synthetic", "--digits", "1,2",
                     "--n-out", "64", "--check", "--out", out, "--quiet"])
        assert code == 0
        names = set(os.listdir(out))
        assert {"samples_aa.csv", "samples_ab.csv", "samples_ba.csv",
                "samples_bb.csv", "classification_report.csv"} <= names

    def test_wrong_digit_count_is_usage_error(self, tmp_path):
        code = main(["swap", "--synthetic", "--digits", "1",
                     "--out", str(tmp_path / "x"), "--quiet"])
        assert code == 2

    def test_missing_files_is_usage_error(self, tmp_path):
        code = main(["swap", "--digits", "1,2",
                     "--out", str(tmp_path / "x"), "--quiet"])
        assert code == 2


class TestAlphaSweepCommand:
    def test_writes_spread_csv(self, tmp_path):
        out = str(tmp_path / "sweep")
        code = main(["alpha-sweep", "--alphas", "0.2,0.8", "--budget", "30",
                     "--out", out, "--quiet"])
        assert code == 0
        with open(os.path.join(out, "spread.csv")) as fh:
            lines = fh.read().strip().split("\n")
        assert lines[0] == "alpha,spread,final_loss,diverged"
        assert len(lines) == 3


class TestTwoSampleCommand:
    def test_file_mode_rejects_shifted_samples(self, tmp_path):
        rng = np.random.default_rng(0)
        pa = tmp_path / "a.csv"
        pb = tmp_path / "b.csv"
        np.savetxt(pa, rng.normal(0, 1, (128, 1)), delimiter=",")
        np.savetxt(pb, rng.normal(4, 1, (128, 1)), delimiter=",")
        out = str(tmp_path / "ts")
        code = main(["two-sample", "--a", str(pa), "--b", str(pb),
                     "--out", out, "--quiet"])
        assert code == 0
        with open(os.path.join(out, "result.csv")) as fh:
            header, row = fh.read().strip().split("\n")
        assert header == "p_value,observed,num_perms,reject"
        assert row.endswith("True")

    def test_file_mode_needs_both_files(self, tmp_path):
        code = main(["two-sample", "--a", str(tmp_path / "a.csv"),
                     "--out", str(tmp_path / "x"), "--quiet"])
        assert code == 2

    def test_unreadable_csv_is_usage_error(self, tmp_path):
        code = main(["two-sample", "--a", str(tmp_path / "missing.csv"),
                     "--b", str(tmp_path / "also.csv"),
                     "--out", str(tmp_path / "x"), "--quiet"])
        assert code == 2


class TestGradCheckCommand:
    def test_passes_and_prints_table(self, tmp_path, capsys):
        code = main(["grad-check", "--out", str(tmp_path / "gc")])
        assert code == 0
        printed = capsys.readouterr().out
        assert "cf_distance_end_to_end" in printed
        assert "FAIL" not in printed

    def test_quiet_silences_stdout(self, tmp_path, capsys):
        code = main(["grad-check", "--quiet", "--out", str(tmp_path / "gc")])
        assert code == 0
        assert capsys.readouterr().out == ""


class TestParser:
    def test_no_subcommand_exits_with_usage(self):
        with pytest.raises(SystemExit) as err:
            main([])
        assert err.value.code == 2

    def test_bad_float_list_exits_with_usage(self):
        with pytest.raises(SystemExit) as err:
            main(["alpha-sweep", "--alphas", "a,b"])
        assert err.value.code == 2
