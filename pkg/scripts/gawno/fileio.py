"""
Atomic file writes and CSV row reading.

Outputs are written to a temporary sibling first and renamed into place, so a
reader never observes a half-written checkpoint, report or CSV.
"""

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Union

from .errors import ParseError

PathLike = Union[str, Path]


def atomic_write_bytes(path: PathLike, payload: bytes) -> Path:
    """Write `payload` to `path` via a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def atomic_write_text(path: PathLike, text: str) -> Path:
    """UTF-8 text variant of atomic_write_bytes()."""
    return atomic_write_bytes(path, text.encode("utf-8"))


def read_csv_rows(path: PathLike) -> list[list[str]]:
    """
    Decode a UTF-8 CSV file into rows of cells.

    Raises:
        ParseError: If the bytes are not valid UTF-8; the row is 1-based and
            counts the header.
    """
    path = Path(path)
    raw = path.read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        row = raw.count(b"\n", 0, e.start) + 1
        bad = raw[e.start : e.start + 1].hex()
        raise ParseError(f"{path} is not valid UTF-8 (byte 0x{bad})", row=row) from e
    return list(csv.reader(io.StringIO(text, newline="")))
