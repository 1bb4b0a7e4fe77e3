"""The `incmat v1` text format.

    incmat v1
    t=<int> n=<int>[ d=<int> h=<int> r=<int> x=<int> z=<int> y=<int>]
    <t rows of exactly n characters from {0,1}>

Newlines are LF. The six design keys are all-or-none and fixed in the order
above. Parsing is strict: wrong line counts, wrong row lengths, foreign
characters, and unknown or reordered header keys are rejected.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError
from .matrix import PoolingMatrix

MAGIC = "incmat v1"
_REQUIRED_KEYS = ("t", "n")
_DESIGN_KEYS = ("d", "h", "r", "x", "z", "y")


@dataclass(frozen=True)
class DesignParams:
    """Design metadata carried in a matrix header."""

    d: int
    h: int
    r: int
    x: int
    z: int
    y: int

    def __post_init__(self):
        if self.d < 1 or self.h < 0 or self.r < 1 or self.x < 1:
            raise InputError("need d >= 1, h >= 0, r >= 1, x >= 1")
        if self.z < 1 or self.y < 0:
            raise InputError("need z >= 1 and y >= 0")
        if self.z - self.y < self.x:
            raise InputError(f"z - y = {self.z - self.y} is below x = {self.x}")

    @property
    def D(self) -> int:
        return max(self.d, self.h)


def format_incmat(matrix: PoolingMatrix, params: DesignParams | None = None) -> str:
    header = f"t={matrix.t} n={matrix.n}"
    if params is not None:
        header += "".join(f" {k}={getattr(params, k)}" for k in _DESIGN_KEYS)
    rows = "\n".join("".join("1" if v else "0" for v in row) for row in matrix.entries)
    return f"{MAGIC}\n{header}\n{rows}\n"


def write_incmat(path, matrix: PoolingMatrix, params: DesignParams | None = None):
    Path(path).write_text(format_incmat(matrix, params), encoding="ascii", newline="\n")


def _parse_header(line):
    fields = line.split(" ")
    if len(fields) not in (2, 8):
        raise InputError(f"header must carry t,n or t,n,{','.join(_DESIGN_KEYS)}")
    expected = _REQUIRED_KEYS + (_DESIGN_KEYS if len(fields) == 8 else ())
    values = {}
    for token, key in zip(fields, expected):
        name, sep, raw = token.partition("=")
        if name != key or not sep:
            raise InputError(f"expected header token {key}=<int>, got {token!r}")
        try:
            values[key] = int(raw)
        except ValueError:
            raise InputError(f"header value for {key} is not an integer: {raw!r}") from None
    return values


def parse_incmat(text: str):
    """Parse incmat v1 text into (PoolingMatrix, DesignParams or None)."""
    if "\r" in text:
        raise InputError("incmat v1 uses LF newlines only")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()  # single trailing newline is fine
    if len(lines) < 3:
        raise InputError("file too short for an incmat v1 matrix")
    if lines[0] != MAGIC:
        raise InputError(f"missing magic line {MAGIC!r}")
    header = _parse_header(lines[1])
    t, n = header["t"], header["n"]
    if t < 1 or n < 1:
        raise InputError("header t and n must be positive")
    body = lines[2:]
    if len(body) != t:
        raise InputError(f"expected {t} matrix rows, found {len(body)}")
    entries = np.empty((t, n), dtype=np.uint8)
    for i, row in enumerate(body):
        if len(row) != n:
            raise InputError(f"row {i} has length {len(row)}, expected {n}")
        if row.strip("01") != "":
            raise InputError(f"row {i} contains characters outside {{0,1}}")
        entries[i] = np.frombuffer(row.encode("ascii"), dtype=np.uint8) - ord("0")
    params = None
    if "d" in header:
        params = DesignParams(**{k: header[k] for k in _DESIGN_KEYS})
    return PoolingMatrix(entries), params


def read_incmat(path):
    try:
        text = Path(path).read_text(encoding="ascii", newline="")
    except UnicodeDecodeError:
        raise InputError(f"{path}: not an ASCII incmat v1 file") from None
    return parse_incmat(text)
