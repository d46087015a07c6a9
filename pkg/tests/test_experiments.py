"""
Desk-scale end-to-end experiments.

These train real networks for hundreds of epochs and are deselected by default;
run them with `pytest -m slow`.
"""

import re
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import pytest
import yaml
from click.testing import CliRunner
from gawno.cli import cli
from gawno.data import SeriesTable, fit_norm, normalize, window
from gawno.fdi import DetectConfig, detect, error_profile, fit_threshold, isolate
from gawno.metrics import confusion_counts, metrics
from gawno.networks import DiscriminatorSpec, GeneratorSpec
from gawno.synthetic import FaultSpec, inject_fault, synth_process
from gawno.training import TrainConfig, train

pytestmark = pytest.mark.slow

FEATURES = 5
TRAIN_STEPS = 2000
HELD_OUT_STEPS = 480
ONSET = 160


class Split(NamedTuple):
    train: SeriesTable
    validation: SeriesTable
    test: SeriesTable


def _split(seed):
    """
    One continuous process cut into three consecutive segments: training rows,
    a normal validation segment for thresholds, and a held-out segment to screen.
    """
    total = TRAIN_STEPS + 2 * HELD_OUT_STEPS
    table = synth_process(FEATURES, total, seed=seed)

    def segment(start, stop):
        labels = np.zeros(stop - start, dtype=np.int64)
        return SeriesTable(list(table.names), table.values[start:stop].copy(), labels)

    return Split(
        train=segment(0, TRAIN_STEPS),
        validation=segment(TRAIN_STEPS, TRAIN_STEPS + HELD_OUT_STEPS),
        test=segment(TRAIN_STEPS + HELD_OUT_STEPS, total),
    )


@lru_cache(maxsize=None)
def _trained(seed, epochs=200, wavelet="db6"):
    split = _split(seed)
    stats = fit_norm(split.train)
    gen_spec = GeneratorSpec(
        features=FEATURES, length=64, lifted_width=4, q_width=16, wavelet=wavelet
    )
    disc_spec = DiscriminatorSpec(
        features=FEATURES, length=64, lifted_width=4, q_width=16, wavelet=wavelet, head_width=8
    )
    cfg = TrainConfig(
        generator=gen_spec, discriminator=disc_spec, epochs=epochs, seed=seed, label_smoothing=0.1
    )
    windows = window(normalize(split.train, stats), gen_spec.length, cfg.window_stride).values
    result = train(windows, cfg)

    detect_cfg = DetectConfig()
    validation = normalize(split.validation, stats).values
    normal_errors = error_profile(validation, result.generator, gen_spec, detect_cfg)
    model = fit_threshold(normal_errors, detect_cfg.k, names=split.train.names)
    return result, gen_spec, stats, model, split.test


def _screen(seed, variable=0, magnitude=3.0):
    result, spec, stats, model, test = _trained(seed)
    faulty = normalize(
        inject_fault(test, FaultSpec("step", variable=variable, onset=ONSET, magnitude=magnitude)),
        stats,
    )
    return detect(faulty, model, result.generator, spec, DetectConfig()), model


class TestDeskExperiment:
    def test_detection_quality(self):
        f1_scores, onsets = [], []
        for seed in range(10):
            report, _ = _screen(seed)
            f1_scores.append(metrics(confusion_counts(report.flags, report.labels)).f1)
            onsets.append(report.onset)
        assert np.median(f1_scores) >= 0.90, f1_scores
        on_time = [o is not None and ONSET <= o <= ONSET + 5 for o in onsets]
        assert sum(on_time) >= 8, onsets

    def test_normal_data_rarely_flagged(self):
        result, spec, stats, model, test = _trained(0)
        report = detect(normalize(test, stats), model, result.generator, spec, DetectConfig())
        assert report.flagged_fraction <= 0.05

    def test_isolation(self):
        hits = 0
        for trial in range(20):
            seed, variable = trial // FEATURES, trial % FEATURES
            report, model = _screen(seed, variable=variable)
            ranking = isolate(report, model)
            hits += bool(ranking) and ranking[0].index == variable
        assert hits >= 16

    def test_reconstruction_error_decreases(self):
        log = _trained(0)[0].log
        errors = [record.probe_error for record in log.records]
        assert np.mean(errors[-10:]) < np.mean(errors[:10])


class TestWaveletSweep:
    @pytest.mark.parametrize("wavelet", ["db1", "db3", "db6", "db8"])
    def test_sweep_emits_metrics(self, fresh_config, tmp_path, wavelet):
        runner = CliRunner()
        document = {
            "paths": {
                "data": str(tmp_path / "series.csv"),
                "normal": str(tmp_path / "series.csv"),
                "checkpoint": str(tmp_path / f"{wavelet}.ckpt"),
                "report": str(tmp_path / f"{wavelet}.csv"),
                "threshold": str(tmp_path / f"{wavelet}.yaml"),
                "log_csv": str(tmp_path / f"{wavelet}_log.csv"),
                "synth_out": str(tmp_path / "series.csv"),
            },
            "generator": {"lifted_width": 4, "q_width": 16},
            "discriminator": {"head_width": 8},
            "train": {"epochs": 50},
            "synth": {"steps": 960},
        }
        config = tmp_path / "sweep.yaml"
        config.write_text(yaml.safe_dump(document))

        for command in ("synth", "train", "detect"):
            args = [command, "-c", str(config)]
            if command == "train":
                args += ["--wavelet", wavelet]
            result = runner.invoke(cli, args)
            assert result.exit_code == 0, result.output
        result = runner.invoke(cli, ["evaluate", "-c", str(config)])
        assert result.exit_code == 0, result.output
        metric_line = r"^precision=\S+ recall=\S+ f1=\S+ auc=\S+ fp=\d+ fn=\d+$"
        assert re.search(metric_line, result.output, re.MULTILINE)
