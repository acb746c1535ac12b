"""Atomic writers for data files."""

import io
import os
import tempfile
from collections.abc import Sequence
from pathlib import Path

import pandas as pd


__docformat__ = "google"
__all__ = (
    "FLOAT_FORMAT",
    "write_csv",
    "write_text",
)


FLOAT_FORMAT = "%.17g"
"""Floats are written with 17 significant digits, which round-trips ``float64``."""


def write_text(path: Path, text: str) -> Path:
    """
    Replace ``path`` with ``text``.

    The text is written to a temporary file next to ``path``, which then replaces
    it, so readers never see partial files.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def write_csv(
    frame: pd.DataFrame,
    path: Path,
    *,
    comment: str | None = None,
    trailer: Sequence[str] = (),
) -> Path:
    """
    Write a frame as CSV without index.

    Args:
        frame: The table.
        path: The target file.
        comment: Written as a leading ``# `` line.
        trailer: Lines written as ``# `` comments after the table.
    """
    buf = io.StringIO()
    if comment is not None:
        buf.write(f"# {comment}\n")
    frame.to_csv(buf, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    for line in trailer:
        buf.write(f"# {line}\n")
    return write_text(path, buf.getvalue())
