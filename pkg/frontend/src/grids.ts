/** Parsers for the service's ASCII grid and grid-stack text formats. */
import type { GridStack, ScalarGrid } from "./types";

function headerValue(line: string, expected: string): number {
  const parts = line.trim().split(/\s+/);
  if (parts.length !== 2 || parts[0].toLowerCase() !== expected.toLowerCase()) {
    throw new Error(`expected header '${expected}', got '${line}'`);
  }
  const value = Number(parts[1]);
  if (Number.isNaN(value)) {
    throw new Error(`bad numeric value in header '${line}'`);
  }
  return value;
}

function parseGridLines(lines: string[], start: number): [ScalarGrid, number] {
  if (start + 6 > lines.length) {
    throw new Error("truncated grid header");
  }
  const ncols = headerValue(lines[start], "ncols");
  const nrows = headerValue(lines[start + 1], "nrows");
  const xOrigin = headerValue(lines[start + 2], "xllcorner");
  const yOrigin = headerValue(lines[start + 3], "yllcorner");
  const cellSizeM = headerValue(lines[start + 4], "cellsize");
  const nodata = headerValue(lines[start + 5], "NODATA_value");
  const values = new Float64Array(ncols * nrows);
  let pos = start + 6;
  for (let r = 0; r < nrows; r++) {
    const row = lines[pos + r].trim().split(/\s+/);
    if (row.length !== ncols) {
      throw new Error(`row ${r} has ${row.length} values, expected ${ncols}`);
    }
    for (let c = 0; c < ncols; c++) {
      values[r * ncols + c] = Number(row[c]);
    }
  }
  return [{ ncols, nrows, xOrigin, yOrigin, cellSizeM, nodata, values },
          pos + nrows];
}

export function parseGrid(text: string): ScalarGrid {
  const lines = text.split("\n").filter((ln) => ln.trim().length > 0);
  return parseGridLines(lines, 0)[0];
}

export function parseStack(text: string): GridStack {
  const lines = text.split("\n").filter((ln) => ln.trim().length > 0);
  if (lines.length === 0) {
    throw new Error("empty stack");
  }
  const head = lines[0].trim().split(/\s+/);
  if (head.length !== 2 || head[0] !== "NLAYERS") {
    throw new Error(`expected NLAYERS header, got '${lines[0]}'`);
  }
  const nLayers = Number(head[1]);
  const stack: GridStack = { labels: [], grids: [] };
  let pos = 1;
  for (let i = 0; i < nLayers; i++) {
    const tag = lines[pos].trim().split(/\s+/);
    if (tag.length !== 2 || tag[0] !== "LAYER") {
      throw new Error(`expected LAYER line, got '${lines[pos]}'`);
    }
    const [grid, next] = parseGridLines(lines, pos + 1);
    stack.labels.push(tag[1]);
    stack.grids.push(grid);
    pos = next;
  }
  return stack;
}

/** The mean-R0 layer for a given day, or null when absent. */
export function dayMean(stack: GridStack, day: number): ScalarGrid | null {
  const index = stack.labels.indexOf(`day${day}:mean`);
  return index >= 0 ? stack.grids[index] : null;
}

/** Number of day layers carried by a result stack. */
export function dayCount(stack: GridStack): number {
  return stack.labels.filter((label) => label.endsWith(":mean")).length;
}
