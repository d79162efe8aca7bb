"""Small helpers for line-delimited files shared across modules."""

from __future__ import annotations

from pathlib import Path
from typing import Iterator


def iter_lines(source) -> Iterator[str]:
    """Yield non-blank lines from a path, file object, or iterable of strings."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    yield line
        return
    for line in source:
        if line.strip():
            yield line
