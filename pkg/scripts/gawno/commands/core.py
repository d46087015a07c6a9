"""Model workflow commands: train, detect, isolate and evaluate."""

import logging
import math
from typing import Optional

import click

from ..checkpoint import load_checkpoint, save_checkpoint
from ..data import SeriesTable, fit_norm, leading_normal, load_csv, normalize, window
from ..errors import ConfigurationError, UndefinedMetricError
from ..fdi import (
    detect,
    error_profile,
    fit_threshold,
    isolate,
    load_threshold,
    read_report,
    save_threshold,
    write_report,
)
from ..fileio import atomic_write_text
from ..metrics import auc_roc, confusion_counts, metrics
from ..training import train
from ..wavelets import SUPPORTED_WAVELETS
from .common import (
    EXIT_DATA,
    config_option,
    exit_on_error,
    fail,
    out_option,
    prepare_config,
    require_path,
    seed_option,
)

logger = logging.getLogger(__name__)


def register_core_commands(cli: click.Group) -> None:
    """Register the model workflow commands on the main CLI group."""
    cli.add_command(cmd_train)
    cli.add_command(cmd_detect)
    cli.add_command(cmd_isolate)
    cli.add_command(cmd_evaluate)


def _check_variables(table: SeriesTable, expected: list[str], role: str) -> None:
    if expected and table.names != expected:
        raise ConfigurationError(
            f"{role} variables {table.names} do not match the checkpoint's {expected}"
        )


@click.command("train")
@config_option
@seed_option
@out_option
@click.option("--epochs", type=click.IntRange(min=0), help="Override train.epochs")
@click.option("--wavelet", type=click.Choice(SUPPORTED_WAVELETS), help="Override the wavelet")
def cmd_train(
    config_path: Optional[str],
    seed: Optional[int],
    out: Optional[str],
    epochs: Optional[int],
    wavelet: Optional[str],
) -> None:
    """Train a GAWNO generator/discriminator pair on normal data."""
    with exit_on_error():
        cfg = prepare_config(
            config_path,
            {
                "train.seed": seed,
                "train.epochs": epochs,
                "generator.wavelet": wavelet,
                "paths.checkpoint": out,
            },
        )
        table = load_csv(require_path(cfg, "data"))
        configured = cfg.get("generator.features")
        if configured is not None and configured != table.features:
            raise ConfigurationError(
                f"generator.features is {configured} but the data has {table.features} variables"
            )

        stats = fit_norm(table)
        train_cfg = cfg.train_config(features=table.features)
        windows = window(
            normalize(table, stats), train_cfg.generator.length, train_cfg.window_stride
        ).normal()
        if len(windows) == 0:
            fail("Data error: no fault-free windows to train on", EXIT_DATA)

        click.echo(
            f"Training on {len(windows)} windows of {table.features} variables "
            f"({train_cfg.epochs} epochs, {train_cfg.wavelet})"
        )
        result = train(windows.values, train_cfg, progress=True)

        checkpoint_path = save_checkpoint(
            result.generator,
            result.discriminator,
            train_cfg,
            require_path(cfg, "checkpoint"),
            norm=stats,
            variables=table.names,
        )
        log_path = result.log.write(require_path(cfg, "log_csv"))

    click.echo(click.style(f"Checkpoint written to {checkpoint_path}", fg="green"))
    click.echo(f"Training log written to {log_path}")
    if result.log.records:
        last = result.log.records[-1]
        click.echo(
            f"Final epoch {last.epoch}: L_D={last.d_loss:.4f} L_G={last.g_loss:.4f} "
            f"probe={last.probe_error:.4f}"
        )


@click.command("detect")
@config_option
@seed_option
@out_option
def cmd_detect(config_path: Optional[str], seed: Optional[int], out: Optional[str]) -> None:
    """Fit thresholds on normal data and flag faults in the target series."""
    with exit_on_error():
        cfg = prepare_config(config_path, {"detect.seed": seed, "paths.report": out})
        ckpt = load_checkpoint(require_path(cfg, "checkpoint"))
        if ckpt.norm is None:
            raise ConfigurationError("Checkpoint carries no normalization statistics")
        spec = ckpt.config.generator
        detect_cfg = cfg.detect_config()

        normal = leading_normal(load_csv(require_path(cfg, "normal")))
        target = load_csv(require_path(cfg, "data"))
        _check_variables(normal, ckpt.variables, "Normal data")
        _check_variables(target, ckpt.variables, "Target data")

        normal_errors = error_profile(
            normalize(normal, ckpt.norm).values, ckpt.generator, spec, detect_cfg
        )
        model = fit_threshold(normal_errors, detect_cfg.k, names=normal.names)
        report = detect(normalize(target, ckpt.norm), model, ckpt.generator, spec, detect_cfg)

        report_path = write_report(report, require_path(cfg, "report"))
        save_threshold(model, require_path(cfg, "threshold"))

    click.echo(f"Report written to {report_path}")
    click.echo(f"Threshold: {model.global_threshold:.6g}")
    click.echo(f"onset: {'none' if report.onset is None else report.onset}")
    click.echo(f"flagged fraction: {report.flagged_fraction:.4f}")


@click.command("isolate")
@config_option
@out_option
def cmd_isolate(config_path: Optional[str], out: Optional[str]) -> None:
    """Rank variables by their contribution to the flagged region of a report."""
    with exit_on_error():
        cfg = prepare_config(config_path, {})
        report = read_report(require_path(cfg, "report"))
        model = load_threshold(require_path(cfg, "threshold"))
        ranking = isolate(report, model)

    if not ranking:
        click.echo(click.style("No flagged timesteps; nothing to isolate.", fg="yellow"))
        return

    click.echo(f"{'rank':>4}  {'variable':<20} {'peak z':>12}")
    click.echo("-" * 40)
    for rank, result in enumerate(ranking, 1):
        click.echo(f"{rank:>4}  {result.name:<20} {result.peak:>12.4f}")

    if out:
        lines = ["rank,variable,peak"]
        lines += [f"{rank},{r.name},{r.peak!r}" for rank, r in enumerate(ranking, 1)]
        atomic_write_text(out, "\n".join(lines) + "\n")
        click.echo(f"Ranking written to {out}")


@click.command("evaluate")
@config_option
@out_option
def cmd_evaluate(config_path: Optional[str], out: Optional[str]) -> None:
    """Score a labeled report: precision, recall, F1, AUC, FP and FN."""
    with exit_on_error():
        cfg = prepare_config(config_path, {})
        report = read_report(require_path(cfg, "report"))
    if report.labels is None:
        fail("Data error: report has no label column", EXIT_DATA)

    counts = confusion_counts(report.flags, report.labels)
    scores = metrics(counts)
    try:
        auc = auc_roc(report.score, report.labels)
    except UndefinedMetricError as e:
        logger.warning(f"AUC undefined: {e}")
        auc = math.nan

    line = (
        f"precision={scores.precision:.6f} recall={scores.recall:.6f} f1={scores.f1:.6f} "
        f"auc={auc:.6f} fp={counts.fp} fn={counts.fn}"
    )
    click.echo(line)
    click.echo()
    click.echo(f"  {'Precision':<10} {scores.precision:>8.4f}")
    click.echo(f"  {'Recall':<10} {scores.recall:>8.4f}")
    click.echo(f"  {'F1':<10} {scores.f1:>8.4f}")
    click.echo(f"  {'AUC':<10} {auc:>8.4f}")
    click.echo(f"  {'TP/FP':<10} {counts.tp:>4}/{counts.fp}")
    click.echo(f"  {'FN/TN':<10} {counts.fn:>4}/{counts.tn}")

    if out:
        atomic_write_text(out, line + "\n")
