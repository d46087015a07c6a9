"""End-to-end tests of the gawno command line."""

import re

import numpy as np
import pytest
import yaml
from click.testing import CliRunner
from gawno.cli import cli
from gawno.data import load_csv
from gawno.fdi import FaultReport, ThresholdModel, save_threshold, write_report
from gawno.metrics import auc_roc, confusion_counts, metrics

TINY_NETWORK = {
    "generator": {
        "length": 16,
        "lifted_width": 2,
        "q_width": 4,
        "wavelet": "db1",
        "levels": 2,
        "depth": 2,
    },
    "discriminator": {"head_width": 4},
    "train": {"epochs": 1, "batch_size": 4},
    "detect": {"draws": 4},
}


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def run_dir(fresh_config, tmp_path):
    """A tiny-network run configuration with every path inside tmp_path."""
    document = dict(TINY_NETWORK)
    document["paths"] = {
        "data": str(tmp_path / "series.csv"),
        "normal": str(tmp_path / "series.csv"),
        "checkpoint": str(tmp_path / "runs" / "model.ckpt"),
        "report": str(tmp_path / "runs" / "report.csv"),
        "threshold": str(tmp_path / "runs" / "threshold.yaml"),
        "log_csv": str(tmp_path / "runs" / "train_log.csv"),
        "synth_out": str(tmp_path / "series.csv"),
    }
    (tmp_path / "run.yaml").write_text(yaml.safe_dump(document))
    return tmp_path


def _invoke(runner, run_dir, *args):
    return runner.invoke(cli, [args[0], "-c", str(run_dir / "run.yaml"), *args[1:]])


def _write_report(path, flags, labels=None):
    flags = np.asarray(flags, dtype=bool)
    residuals = np.column_stack([flags * 4.0 + 0.1, np.full(len(flags), 0.2)])
    report = FaultReport(
        names=["a", "b"],
        score=residuals.mean(axis=1),
        flags=flags,
        residuals=residuals,
        variable_flags=np.zeros(residuals.shape, dtype=bool),
        labels=None if labels is None else np.asarray(labels),
    )
    write_report(report, path)


class TestSynth:
    def test_defaults(self, runner, fresh_config, tmp_path):
        out = tmp_path / "synthetic.csv"
        result = runner.invoke(cli, ["synth", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "T=480 F=5 fault=step onset=160" in result.output
        table = load_csv(out)
        assert (table.steps, table.features) == (480, 5)
        assert table.labels[:160].sum() == 0
        assert table.labels[160:].all()

    def test_seed_determinism(self, runner, fresh_config, tmp_path):
        paths = [tmp_path / name for name in ("a.csv", "b.csv", "c.csv")]
        for path, seed in zip(paths, ("3", "3", "4")):
            assert runner.invoke(cli, ["synth", "--seed", seed, "--out", str(path)]).exit_code == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()
        assert paths[0].read_bytes() != paths[2].read_bytes()

    def test_no_fault(self, runner, fresh_config, tmp_path):
        config = tmp_path / "clean.yaml"
        config.write_text("fault:\n  kind: none\nsynth:\n  steps: 50\n")
        out = tmp_path / "clean.csv"
        result = runner.invoke(cli, ["synth", "-c", str(config), "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "fault=none onset=none" in result.output
        table = load_csv(out)
        assert table.labels is not None
        assert not table.labels.any()

    def test_invalid_fault(self, runner, fresh_config, tmp_path):
        config = tmp_path / "bad.yaml"
        config.write_text("fault:\n  kind: explosion\n")
        result = runner.invoke(cli, ["synth", "-c", str(config)])
        assert result.exit_code == 1
        assert "Configuration error" in result.output


class TestTrain:
    def test_zero_epochs(self, runner, run_dir):
        assert _invoke(runner, run_dir, "synth").exit_code == 0
        result = _invoke(runner, run_dir, "train", "--epochs", "0")
        assert result.exit_code == 0, result.output
        assert (run_dir / "runs" / "model.ckpt").exists()
        log = (run_dir / "runs" / "train_log.csv").read_text().splitlines()
        assert log == ["epoch,d_loss,g_loss,probe_error"]
        assert "Final epoch" not in result.output

    def test_one_epoch(self, runner, run_dir):
        _invoke(runner, run_dir, "synth")
        result = _invoke(runner, run_dir, "train", "--wavelet", "db3", "--seed", "2")
        assert result.exit_code == 0, result.output
        assert "Final epoch 1:" in result.output
        assert "db3" in result.output

    def test_missing_data(self, runner, run_dir):
        result = _invoke(runner, run_dir, "train")
        assert result.exit_code == 2
        assert "cannot read" in result.output

    def test_data_path_unset(self, runner, fresh_config):
        result = runner.invoke(cli, ["train"])
        assert result.exit_code == 1
        assert "paths.data is not set" in result.output

    def test_malformed_data(self, runner, run_dir):
        (run_dir / "series.csv").write_text("x1,x2\n1.0,oops\n")
        result = _invoke(runner, run_dir, "train")
        assert result.exit_code == 2
        assert "row 2, column 2" in result.output

    def test_non_utf8_data(self, runner, run_dir):
        (run_dir / "series.csv").write_bytes(b"x1,x2\n1.0,2.0\n\xff,1.0\n")
        result = _invoke(runner, run_dir, "train")
        assert result.exit_code == 2
        assert "not valid UTF-8 (byte 0xff) at row 3" in result.output

    def test_bad_config(self, runner, fresh_config, tmp_path):
        config = tmp_path / "bad.yaml"
        config.write_text("train:\n  epochs: many\n")
        result = runner.invoke(cli, ["train", "-c", str(config)])
        assert result.exit_code == 1
        assert "train.epochs" in result.output

    def test_bad_grad_clip(self, runner, run_dir):
        document = yaml.safe_load((run_dir / "run.yaml").read_text())
        document["train"]["grad_clip"] = "x"
        (run_dir / "run.yaml").write_text(yaml.safe_dump(document))
        result = _invoke(runner, run_dir, "train")
        assert result.exit_code == 1
        assert "train.grad_clip must be a number" in result.output


class TestDetect:
    def test_pipeline(self, runner, run_dir):
        assert _invoke(runner, run_dir, "synth").exit_code == 0
        assert _invoke(runner, run_dir, "train").exit_code == 0
        result = _invoke(runner, run_dir, "detect")
        assert result.exit_code == 0, result.output
        assert re.search(r"^onset: (\d+|none)$", result.output, re.MULTILINE)
        assert re.search(r"^flagged fraction: \d\.\d{4}$", result.output, re.MULTILINE)

        header = (run_dir / "runs" / "report.csv").read_text().splitlines()[0].split(",")
        assert len(header) == 3 + 2 * 5 + 1
        assert header[-1] == "label"
        threshold = yaml.safe_load((run_dir / "runs" / "threshold.yaml").read_text())
        assert threshold["names"] == ["x1", "x2", "x3", "x4", "x5"]

        evaluated = _invoke(runner, run_dir, "evaluate")
        assert evaluated.exit_code == 0, evaluated.output
        metric_line = r"^precision=\S+ recall=\S+ f1=\S+ auc=\S+ fp=\d+ fn=\d+$"
        assert re.search(metric_line, evaluated.output, re.MULTILINE)

    def test_variable_mismatch(self, runner, run_dir):
        _invoke(runner, run_dir, "synth")
        assert _invoke(runner, run_dir, "train", "--epochs", "0").exit_code == 0
        narrow = run_dir / "narrow.yaml"
        narrow.write_text("synth:\n  features: 4\n")
        series = str(run_dir / "series.csv")
        assert runner.invoke(cli, ["synth", "-c", str(narrow), "--out", series]).exit_code == 0
        result = _invoke(runner, run_dir, "detect")
        assert result.exit_code == 1
        assert "do not match" in result.output

    def test_missing_checkpoint(self, runner, run_dir):
        _invoke(runner, run_dir, "synth")
        result = _invoke(runner, run_dir, "detect")
        assert result.exit_code == 2


class TestIsolate:
    def test_ranking(self, runner, run_dir, tmp_path):
        _write_report(run_dir / "runs" / "report.csv", [0, 0, 1, 1])
        save_threshold(
            ThresholdModel(mean=np.array([0.1, 0.2]), std=np.array([0.1, 0.1]), names=["a", "b"]),
            run_dir / "runs" / "threshold.yaml",
        )
        out = tmp_path / "ranking.csv"
        result = _invoke(runner, run_dir, "isolate", "--out", str(out))
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert lines[0] == "rank,variable,peak"
        assert lines[1].startswith("1,a,")
        assert lines[2] == "2,b,0.0"

    def test_nothing_flagged(self, runner, run_dir):
        _write_report(run_dir / "runs" / "report.csv", [0, 0, 0])
        save_threshold(
            ThresholdModel(mean=np.zeros(2), std=np.ones(2)), run_dir / "runs" / "threshold.yaml"
        )
        result = _invoke(runner, run_dir, "isolate")
        assert result.exit_code == 0
        assert "No flagged timesteps" in result.output


class TestEvaluate:
    def test_perfect_flags(self, runner, run_dir):
        _write_report(run_dir / "runs" / "report.csv", [0, 0, 1, 1, 1], labels=[0, 0, 1, 1, 1])
        result = _invoke(runner, run_dir, "evaluate")
        assert result.exit_code == 0, result.output
        assert (
            "precision=1.000000 recall=1.000000 f1=1.000000 auc=1.000000 fp=0 fn=0"
            in result.output
        )

    def test_all_normal_predictions(self, runner, run_dir):
        _write_report(run_dir / "runs" / "report.csv", [0, 0, 0, 0], labels=[0, 1, 1, 1])
        result = _invoke(runner, run_dir, "evaluate")
        assert result.exit_code == 0, result.output
        assert "recall=0.000000" in result.output
        assert "fn=3" in result.output

    def test_matches_metric_functions(self, runner, run_dir):
        rng = np.random.default_rng(8)
        flags = rng.random(200) < 0.4
        labels = (rng.random(200) < 0.5).astype(int)
        _write_report(run_dir / "runs" / "report.csv", flags, labels=labels)
        result = _invoke(runner, run_dir, "evaluate")
        assert result.exit_code == 0, result.output

        counts = confusion_counts(flags, labels)
        scores = metrics(counts)
        auc = auc_roc(flags * 2.0 + 0.15, labels)
        expected = (
            f"precision={scores.precision:.6f} recall={scores.recall:.6f} f1={scores.f1:.6f} "
            f"auc={auc:.6f} fp={counts.fp} fn={counts.fn}"
        )
        assert expected in result.output

    def test_missing_labels(self, runner, run_dir):
        _write_report(run_dir / "runs" / "report.csv", [0, 1])
        result = _invoke(runner, run_dir, "evaluate")
        assert result.exit_code == 2
        assert "report has no label column" in result.output


class TestVersion:
    def test_version(self, runner):
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert "gawno, version 0.1.0" in result.output
