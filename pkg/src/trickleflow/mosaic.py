"""Stitching per-tile rasters into one mosaic grid.

Tiles are placed by their grid coordinates; they must share cell size
and nodata, align to the cell lattice, and agree wherever they overlap.
Uncovered cells stay nodata.
"""
from __future__ import annotations

from .grid import GridStack, ScalarGrid


class MosaicMismatchError(ValueError):
    def __init__(self, message: str, row: int | None = None,
                 col: int | None = None):
        super().__init__(message)
        self.row = row
        self.col = col


def _lattice_offset(value: float, cell: float, what: str) -> int:
    steps = value / cell
    rounded = round(steps)
    if abs(steps - rounded) > 1e-6:
        raise MosaicMismatchError(f"{what} not aligned to the cell lattice")
    return int(rounded)


def stitch_tiles(tiles: list[ScalarGrid]) -> ScalarGrid:
    if not tiles:
        raise ValueError("no tiles to stitch")
    cell = tiles[0].cell_size_m
    nodata = tiles[0].nodata
    for t in tiles[1:]:
        if t.cell_size_m != cell:
            raise MosaicMismatchError("tiles differ in cell size")
        if t.nodata != nodata:
            raise MosaicMismatchError("tiles differ in nodata sentinel")

    x_min = min(t.x_origin for t in tiles)
    y_min = min(t.y_origin for t in tiles)
    y_top = max(t.y_origin + t.nrows * t.cell_size_m for t in tiles)
    x_max = max(t.x_origin + t.ncols * t.cell_size_m for t in tiles)
    ncols = _lattice_offset(x_max - x_min, cell, "mosaic width")
    nrows = _lattice_offset(y_top - y_min, cell, "mosaic height")

    values = [nodata] * (ncols * nrows)
    covered = [False] * (ncols * nrows)
    for t in tiles:
        col0 = _lattice_offset(t.x_origin - x_min, cell, "tile x origin")
        row0 = _lattice_offset(
            y_top - (t.y_origin + t.nrows * cell), cell, "tile y origin")
        for r in range(t.nrows):
            for c in range(t.ncols):
                i = (row0 + r) * ncols + (col0 + c)
                v = t.values[r * t.ncols + c]
                if covered[i] and values[i] != v:
                    raise MosaicMismatchError(
                        f"tiles disagree at row {row0 + r}, col {col0 + c}: "
                        f"{values[i]!r} vs {v!r}",
                        row=row0 + r, col=col0 + c)
                values[i] = v
                covered[i] = True

    return ScalarGrid(ncols=ncols, nrows=nrows, x_origin=x_min,
                      y_origin=y_min, cell_size_m=cell, nodata=nodata,
                      values=values)


def stitch_stacks(stacks: list[GridStack]) -> GridStack:
    """Stitch layer-by-layer; all stacks must carry the same labels."""
    if not stacks:
        raise ValueError("no stacks to stitch")
    labels = stacks[0].labels()
    for s in stacks[1:]:
        if s.labels() != labels:
            raise MosaicMismatchError("stacks differ in layer labels")
    out = GridStack()
    for label in labels:
        out.append(label, stitch_tiles([s.get(label) for s in stacks]))
    return out
