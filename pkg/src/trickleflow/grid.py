"""Row-major 2D scalar fields and their on-disk ASCII formats.

Two formats live here:

* the single-grid ASCII format (ESRI-style header followed by ``nrows``
  lines of ``ncols`` values, row 0 = northernmost), used for every grid
  that crosses a module boundary, and
* a multi-layer "stack" built from the same blocks, used for daily
  series (inputs, R0 mean/stddev rasters, mosaics).

Values are written with ``repr``-fidelity so a write/read round trip is
bit-exact.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

DEFAULT_NODATA = -9999.0
DEFAULT_CELL_SIZE_M = 250.0


class GridFormatError(ValueError):
    """Raised when an ASCII grid or stack cannot be parsed."""


@dataclass
class ScalarGrid:
    """A row-major 2D field; row 0 is the northernmost row."""

    ncols: int
    nrows: int
    x_origin: float = 0.0
    y_origin: float = 0.0
    cell_size_m: float = DEFAULT_CELL_SIZE_M
    nodata: float = DEFAULT_NODATA
    values: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.ncols <= 0 or self.nrows <= 0:
            raise ValueError("grid dimensions must be positive")
        if self.cell_size_m <= 0:
            raise ValueError("cell_size_m must be positive")
        if not self.values:
            self.values = [0.0] * (self.ncols * self.nrows)
        if len(self.values) != self.ncols * self.nrows:
            raise ValueError(
                f"values length {len(self.values)} != ncols*nrows "
                f"{self.ncols * self.nrows}"
            )

    # -- indexing helpers ---------------------------------------------------

    def at(self, row: int, col: int) -> float:
        return self.values[row * self.ncols + col]

    def set(self, row: int, col: int, value: float) -> None:
        self.values[row * self.ncols + col] = value

    def is_nodata(self, value: float) -> bool:
        return value == self.nodata

    def cell_xy(self, linear_index: int) -> tuple[int, int]:
        """(col, row) of a linear cell index."""
        return linear_index % self.ncols, linear_index // self.ncols

    def same_geometry(self, other: "ScalarGrid") -> bool:
        return (
            self.ncols == other.ncols
            and self.nrows == other.nrows
            and self.x_origin == other.x_origin
            and self.y_origin == other.y_origin
            and self.cell_size_m == other.cell_size_m
        )

    def copy_geometry(self, values: list[float] | None = None,
                      nodata: float | None = None) -> "ScalarGrid":
        return ScalarGrid(
            ncols=self.ncols,
            nrows=self.nrows,
            x_origin=self.x_origin,
            y_origin=self.y_origin,
            cell_size_m=self.cell_size_m,
            nodata=self.nodata if nodata is None else nodata,
            values=list(self.values) if values is None else values,
        )

    def data_values(self) -> list[float]:
        """All non-nodata values."""
        return [v for v in self.values if v != self.nodata]

    def crop_rows(self, row_start: int, row_end: int) -> "ScalarGrid":
        """Rows [row_start, row_end) as a new grid with adjusted origin.

        y_origin is the southern edge, so cropping northern rows moves it.
        """
        if not (0 <= row_start < row_end <= self.nrows):
            raise ValueError("bad row range")
        values: list[float] = []
        for r in range(row_start, row_end):
            values.extend(self.values[r * self.ncols:(r + 1) * self.ncols])
        return ScalarGrid(
            ncols=self.ncols,
            nrows=row_end - row_start,
            x_origin=self.x_origin,
            y_origin=self.y_origin + (self.nrows - row_end) * self.cell_size_m,
            cell_size_m=self.cell_size_m,
            nodata=self.nodata,
            values=values,
        )


# -- single-grid ASCII format -----------------------------------------------

def format_grid(grid: ScalarGrid) -> str:
    out = io.StringIO()
    out.write(f"ncols {grid.ncols}\n")
    out.write(f"nrows {grid.nrows}\n")
    out.write(f"xllcorner {grid.x_origin!r}\n")
    out.write(f"yllcorner {grid.y_origin!r}\n")
    out.write(f"cellsize {grid.cell_size_m!r}\n")
    out.write(f"NODATA_value {grid.nodata!r}\n")
    for r in range(grid.nrows):
        row = grid.values[r * grid.ncols:(r + 1) * grid.ncols]
        out.write(" ".join(repr(v) for v in row))
        out.write("\n")
    return out.getvalue()


def _parse_header_line(line: str, expect: str) -> float:
    parts = line.split()
    if len(parts) != 2 or parts[0].lower() != expect.lower():
        raise GridFormatError(f"expected header '{expect}', got {line!r}")
    try:
        return float(parts[1])
    except ValueError as exc:
        raise GridFormatError(f"bad numeric value in header {line!r}") from exc


def parse_grid(text: str) -> ScalarGrid:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    return _parse_grid_lines(lines, 0)[0]


def _parse_grid_lines(lines: Sequence[str], start: int) -> tuple[ScalarGrid, int]:
    """Parse one grid block starting at lines[start]; returns (grid, next)."""
    if start + 6 > len(lines):
        raise GridFormatError("truncated grid header")
    ncols = int(_parse_header_line(lines[start], "ncols"))
    nrows = int(_parse_header_line(lines[start + 1], "nrows"))
    x_origin = _parse_header_line(lines[start + 2], "xllcorner")
    y_origin = _parse_header_line(lines[start + 3], "yllcorner")
    cell_size = _parse_header_line(lines[start + 4], "cellsize")
    nodata = _parse_header_line(lines[start + 5], "NODATA_value")
    if ncols <= 0 or nrows <= 0:
        raise GridFormatError("non-positive grid dimensions")
    pos = start + 6
    if pos + nrows > len(lines):
        raise GridFormatError("truncated grid rows")
    values: list[float] = []
    for r in range(nrows):
        row = lines[pos + r].split()
        if len(row) != ncols:
            raise GridFormatError(
                f"row {r} has {len(row)} values, expected {ncols}"
            )
        values.extend(float(v) for v in row)
    grid = ScalarGrid(
        ncols=ncols,
        nrows=nrows,
        x_origin=x_origin,
        y_origin=y_origin,
        cell_size_m=cell_size,
        nodata=nodata,
        values=values,
    )
    return grid, pos + nrows


def write_grid(path, grid: ScalarGrid) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_grid(grid))


def read_grid(path) -> ScalarGrid:
    with open(path, "r", encoding="ascii") as fh:
        return parse_grid(fh.read())


# -- multi-layer stacks -------------------------------------------------------

@dataclass
class GridStack:
    """Named layers of identically shaped grids (e.g. one per day)."""

    layers: list[tuple[str, ScalarGrid]] = field(default_factory=list)

    def append(self, label: str, grid: ScalarGrid) -> None:
        if self.layers and not self.layers[0][1].same_geometry(grid):
            raise ValueError("stack layers must share geometry")
        self.layers.append((label, grid))

    def labels(self) -> list[str]:
        return [label for label, _ in self.layers]

    def get(self, label: str) -> ScalarGrid:
        for lab, grid in self.layers:
            if lab == label:
                return grid
        raise KeyError(label)

    def select(self, prefix: str) -> list[tuple[str, ScalarGrid]]:
        return [(lab, g) for lab, g in self.layers if lab.startswith(prefix)]

    def __len__(self) -> int:
        return len(self.layers)


def format_stack(stack: GridStack) -> str:
    out = io.StringIO()
    out.write(f"NLAYERS {len(stack.layers)}\n")
    for label, grid in stack.layers:
        if any(ch.isspace() for ch in label):
            raise ValueError(f"layer label may not contain whitespace: {label!r}")
        out.write(f"LAYER {label}\n")
        out.write(format_grid(grid))
    return out.getvalue()


def parse_stack(text: str) -> GridStack:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise GridFormatError("empty stack")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "NLAYERS":
        raise GridFormatError(f"expected NLAYERS header, got {lines[0]!r}")
    n_layers = int(head[1])
    stack = GridStack()
    pos = 1
    for _ in range(n_layers):
        if pos >= len(lines):
            raise GridFormatError("truncated stack")
        tag = lines[pos].split()
        if len(tag) != 2 or tag[0] != "LAYER":
            raise GridFormatError(f"expected LAYER line, got {lines[pos]!r}")
        label = tag[1]
        grid, pos = _parse_grid_lines(lines, pos + 1)
        stack.append(label, grid)
    return stack


def write_stack(path, stack: GridStack) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_stack(stack))


def read_stack(path) -> GridStack:
    with open(path, "r", encoding="ascii") as fh:
        return parse_stack(fh.read())


def daily_stack(grids: Iterable[ScalarGrid], kind: str = "mean") -> GridStack:
    """Stack per-day grids under labels ``day<i>:<kind>``."""
    stack = GridStack()
    for i, grid in enumerate(grids):
        stack.append(f"day{i}:{kind}", grid)
    return stack
