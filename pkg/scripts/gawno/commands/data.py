"""Data preparation commands."""

import logging
from typing import Optional

import click

from ..data import write_csv
from ..synthetic import inject_fault, synth_process
from .common import (
    config_option,
    exit_on_error,
    out_option,
    prepare_config,
    require_path,
    seed_option,
)

logger = logging.getLogger(__name__)


def register_data_commands(cli: click.Group) -> None:
    """Register data preparation commands on the main CLI group."""
    cli.add_command(cmd_synth)


@click.command("synth")
@config_option
@seed_option
@out_option
def cmd_synth(config_path: Optional[str], seed: Optional[int], out: Optional[str]) -> None:
    """Generate a labeled synthetic process series, optionally with a fault."""
    with exit_on_error():
        cfg = prepare_config(config_path, {"synth.seed": seed, "paths.synth_out": out})
        synth_cfg = cfg.synth_config()
        fault = cfg.fault_spec()
        table = synth_process(synth_cfg.features, synth_cfg.steps, synth_cfg.seed, synth_cfg)
        if fault is not None:
            table = inject_fault(table, fault, seed=synth_cfg.seed)
        path = write_csv(table, require_path(cfg, "synth_out"))

    kind = fault.kind if fault else "none"
    onset = fault.onset if fault else "none"
    click.echo(f"Wrote {path}")
    click.echo(f"T={table.steps} F={table.features} fault={kind} onset={onset}")
