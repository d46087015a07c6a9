"""Shared plumbing for subcommands: config loading, flags and exit codes."""

import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Callable, NoReturn, Optional

import click

from ..config import RunConfig, get_config
from ..errors import (
    CheckpointError,
    ConfigurationError,
    ConstantChannelError,
    DimensionError,
    InsufficientDataError,
    LengthError,
    NumericalError,
    ParseError,
)

logger = logging.getLogger(__name__)

EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


def fail(message: str, code: int) -> NoReturn:
    """Print a single red diagnostic line and exit."""
    click.echo(click.style(message, fg="red"), err=True)
    sys.exit(code)


@contextmanager
def exit_on_error() -> Iterator[None]:
    """Translate library errors into the documented exit codes."""
    try:
        yield
    except (ConfigurationError, CheckpointError, IndexError) as e:
        logger.debug("Configuration failure", exc_info=True)
        fail(f"Configuration error: {e}", EXIT_CONFIG)
    except (FileNotFoundError, IsADirectoryError) as e:
        fail(f"Data error: cannot read {e.filename}", EXIT_DATA)
    except (
        ParseError,
        LengthError,
        DimensionError,
        ConstantChannelError,
        InsufficientDataError,
    ) as e:
        logger.debug("Data failure", exc_info=True)
        fail(f"Data error: {e}", EXIT_DATA)
    except NumericalError as e:
        fail(f"Numerical error: {e}", EXIT_NUMERICAL)


def config_option(fn: Callable) -> Callable:
    return click.option(
        "-c",
        "--config",
        "config_path",
        type=click.Path(dir_okay=False),
        help="YAML run configuration",
    )(fn)


def seed_option(fn: Callable) -> Callable:
    return click.option("--seed", type=int, help="Override the random seed")(fn)


def out_option(fn: Callable) -> Callable:
    return click.option(
        "--out", type=click.Path(dir_okay=False), help="Override the output path"
    )(fn)


def prepare_config(config_path: Optional[str], overrides: dict[str, Any]) -> RunConfig:
    """
    Load the run configuration for one command.

    Args:
        config_path: Optional user config file merged over the defaults.
        overrides: Dotted keys set from command-line flags; None values are skipped.

    Returns:
        The process-wide RunConfig, freshly reset.
    """
    cfg = get_config()
    if config_path:
        cfg.load(Path(config_path))
    else:
        cfg.reload()
    for key, value in overrides.items():
        cfg.override(key, value)

    ctx = click.get_current_context(silent=True)
    verbose = bool(ctx and ctx.obj and ctx.obj.get("verbose"))
    if not verbose:
        logging.getLogger().setLevel(cfg.get("logging.level", "INFO"))
    return cfg


def require_path(cfg: RunConfig, key: str) -> Path:
    """Return `paths.<key>` or exit with a configuration error when it is unset."""
    path = cfg.path(key)
    if path is None:
        fail(f"Configuration error: paths.{key} is not set", EXIT_CONFIG)
    return path
