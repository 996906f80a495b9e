/** Local-maxima overlay markers derived from a persistence diagram. */
import type { Diagram, MaximaMarker } from "./types";

/**
 * The top_k most persistent diagram points as map markers, bar height
 * proportional to persistence. Diagram points without a source cell
 * (barycentre averages) are skipped.
 */
export function overlayMaxima(diagram: Diagram, topK: number): MaximaMarker[] {
  if (topK < 0) {
    throw new Error("topK must be >= 0");
  }
  const placed = diagram.pairs.filter((p) => p.cell_x >= 0 && p.cell_y >= 0);
  const ordered = [...placed].sort((a, b) =>
    b.persistence - a.persistence
    || (a.cell_y * 1e9 + a.cell_x) - (b.cell_y * 1e9 + b.cell_x));
  const top = ordered.slice(0, topK);
  const scale = top.length > 0 ? Math.max(...top.map((p) => p.persistence)) : 1;
  return top.map((p) => ({
    cellX: p.cell_x,
    cellY: p.cell_y,
    value: p.birth,
    persistence: p.persistence,
    height: scale > 0 ? p.persistence / scale : 1,
  }));
}
