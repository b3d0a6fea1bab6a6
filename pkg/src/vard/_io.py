"""Atomic file writing and deterministic CSV formatting."""

from __future__ import annotations

import csv
import io
import os
import tempfile

__all__ = ["format_cell", "atomic_write_text", "write_csv"]


def format_cell(value) -> str:
    """Floats at 17 significant digits (lossless for float64), everything
    else via str — keeps output files byte-stable across runs."""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename, so a
    failure never leaves a partial output file."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")  # RFC 4180 line endings
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(c) for c in row])
    atomic_write_text(path, buf.getvalue())
