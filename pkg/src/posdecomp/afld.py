"""Reader and writer for the ASCII ``AFLD 1`` field format.

Layout::

    AFLD 1
    <ndim> <n1> [<n2> [<n3>]]
    spacing <h>
    origin <o1> [<o2> [<o3>]]
    <values, whitespace separated, row-major>

Mask files use the same layout with values in {0, 1}.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = "AFLD"
VERSION = "1"


class AFLDError(ValueError):
    """Malformed AFLD content. ``line`` is 1-based, or None for whole-file issues."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}".strip() if where else message)


@dataclass(frozen=True)
class AFLDField:
    values: np.ndarray
    spacing: float
    origin: tuple[float, ...]

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.values.shape)


def format_afld(values: np.ndarray, spacing: float, origin) -> str:
    values = np.asarray(values, dtype=float)
    if values.ndim not in (1, 2, 3):
        raise ValueError(f"AFLD supports 1 to 3 dimensions, got {values.ndim}")
    origin = tuple(float(o) for o in np.broadcast_to(np.asarray(origin, float), (values.ndim,)))
    lines = [
        f"{MAGIC} {VERSION}",
        " ".join([str(values.ndim)] + [str(n) for n in values.shape]),
        f"spacing {spacing!r}",
        "origin " + " ".join(repr(o) for o in origin),
    ]
    flat = values.ravel(order="C")
    row = values.shape[-1]
    for start in range(0, flat.size, row):
        lines.append(" ".join("%.17g" % v for v in flat[start:start + row]))
    return "\n".join(lines) + "\n"


def parse_afld(text: str, path: str | None = None) -> AFLDField:
    lines = text.splitlines()

    def header(i: int, expect: str | None = None) -> list[str]:
        if i >= len(lines):
            raise AFLDError("unexpected end of file in header", i + 1, path)
        toks = lines[i].split()
        if expect is not None and (not toks or toks[0] != expect):
            raise AFLDError(f"expected '{expect} ...', got {lines[i]!r}", i + 1, path)
        return toks

    toks = header(0)
    if toks != [MAGIC, VERSION]:
        raise AFLDError(f"bad magic line {lines[0] if lines else ''!r}, expected 'AFLD 1'", 1, path)

    toks = header(1)
    if toks and toks[0] == "ndim":
        toks = toks[1:]
    try:
        dims = [int(t) for t in toks]
    except ValueError:
        raise AFLDError(f"non-integer dimension line {lines[1]!r}", 2, path) from None
    if not dims or dims[0] not in (1, 2, 3) or len(dims) != dims[0] + 1:
        raise AFLDError(f"dimension line must be 'ndim n1 [n2 [n3]]', got {lines[1]!r}", 2, path)
    ndim, shape = dims[0], tuple(dims[1:])
    if any(n <= 0 for n in shape):
        raise AFLDError("grid sizes must be positive", 2, path)

    toks = header(2, "spacing")
    try:
        spacing = float(toks[1]) if len(toks) == 2 else float("nan")
    except ValueError:
        spacing = float("nan")
    if not (np.isfinite(spacing) and spacing > 0):
        raise AFLDError(f"spacing must be one positive number, got {lines[2]!r}", 3, path)

    toks = header(3, "origin")
    if len(toks) != ndim + 1:
        raise AFLDError(f"origin needs {ndim} coordinates, got {lines[3]!r}", 4, path)
    try:
        origin = tuple(float(t) for t in toks[1:])
    except ValueError:
        raise AFLDError(f"non-numeric origin {lines[3]!r}", 4, path) from None

    values: list[float] = []
    for lineno, line in enumerate(lines[4:], start=5):
        for tok in line.split():
            try:
                values.append(float(tok))
            except ValueError:
                raise AFLDError(f"non-numeric value {tok!r}", lineno, path) from None
    expected = int(np.prod(shape))
    if len(values) != expected:
        raise AFLDError(f"expected {expected} values, found {len(values)}", None, path)
    arr = np.asarray(values, dtype=float).reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise AFLDError("field contains non-finite values", None, path)
    return AFLDField(arr, spacing, origin)


def read_afld(path) -> AFLDField:
    path = str(path)
    with open(path, "r", encoding="ascii") as fh:
        return parse_afld(fh.read(), path)


def read_mask(path) -> AFLDField:
    fld = read_afld(path)
    bad = ~np.isin(fld.values, (0.0, 1.0))
    if bad.any():
        raise AFLDError("mask values must be 0 or 1", None, str(path))
    return AFLDField(fld.values.astype(bool), fld.spacing, fld.origin)


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_afld(path, values: np.ndarray, spacing: float, origin) -> None:
    atomic_write_text(path, format_afld(values, spacing, origin))
