"""Plain-TSV checkpoint tables with a fixed, escaped cell encoding."""
from __future__ import annotations

import os
import re
from pathlib import Path
from typing import Iterable, Iterator, Sequence

_ESC = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESC = {"\\\\": "\\", "\\t": "\t", "\\n": "\n", "\\r": "\r"}
_ESC_RE = re.compile(r"[\\\t\n\r]")
_UNESC_RE = re.compile(r"\\[\\tnr]")


class CheckpointError(RuntimeError):
    pass


def escape(cell: str) -> str:
    return _ESC_RE.sub(lambda m: _ESC[m.group()], cell)


def unescape(cell: str) -> str:
    return _UNESC_RE.sub(lambda m: _UNESC[m.group()], cell)


def write_table(path: Path, columns: Sequence[str], rows: Iterable[Sequence[str]]) -> int:
    """Write atomically: a crash never leaves a half-written checkpoint behind."""
    tmp = path.with_name(path.name + ".tmp")
    n = 0
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(columns) + "\n")
        for row in rows:
            if len(row) != len(columns):
                raise CheckpointError(f"{path.name}: row has {len(row)} cells, expected {len(columns)}")
            fh.write("\t".join(escape(str(c)) for c in row) + "\n")
            n += 1
    os.replace(tmp, path)
    return n


def read_table(path: Path, columns: Sequence[str]) -> Iterator[list[str]]:
    if not path.is_file():
        raise CheckpointError(f"checkpoint {path} is missing; run the earlier stages first")
    with open(path, encoding="utf-8", newline="\n") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header != list(columns):
            raise CheckpointError(f"{path}: unexpected header {header}")
        for lineno, line in enumerate(fh, start=2):
            cells = line.rstrip("\n").split("\t")
            if len(cells) != len(columns):
                raise CheckpointError(f"{path}:{lineno}: expected {len(columns)} cells, got {len(cells)}")
            yield [unescape(c) for c in cells]
