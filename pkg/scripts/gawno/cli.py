"""Command-line interface bootstrap for GAWNO."""

import logging

import click
import colorlog
from dotenv import load_dotenv

# Load environment variables from .env file (if it exists)
load_dotenv()

from . import __version__
from .commands.core import register_core_commands
from .commands.data import register_data_commands
from .config import get_config

CONSOLE_FORMAT = "%(log_color)s%(asctime)s - %(levelname)s - %(message)s"


def setup_console_logging() -> None:
    """Attach a coloured stderr handler to the root logger once."""
    root = logging.getLogger()
    if any(getattr(h, "_gawno_console", False) for h in root.handlers):
        return
    handler = colorlog.StreamHandler()
    handler.setFormatter(colorlog.ColoredFormatter(CONSOLE_FORMAT))
    handler._gawno_console = True
    root.addHandler(handler)
    root.setLevel(logging.INFO)


def setup_file_logging() -> None:
    """Set up file logging if enabled."""
    config = get_config()
    if config.get("logging.file_enabled", False):
        log_file = config.logs_dir / "gawno.log"
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(logging.Formatter(config.get("logging.format")))
        logging.getLogger().addHandler(file_handler)


setup_console_logging()
logger = logging.getLogger(__name__)


@click.group()
@click.version_option(version=__version__, prog_name="gawno")
@click.option("-v", "--verbose", is_flag=True, help="Enable verbose output")
@click.pass_context
def cli(ctx: click.Context, verbose: bool) -> None:
    """GAWNO - wavelet neural operator GANs for process fault detection."""
    ctx.obj = {"verbose": verbose}
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    setup_file_logging()


register_core_commands(cli)
register_data_commands(cli)


def main() -> None:
    """Main entry point."""
    cli()


if __name__ == "__main__":
    main()
