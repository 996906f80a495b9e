/**
 * Brushing and linking: selecting diagram points in the (birth,
 * persistence) plane highlights their source cells on the map.
 */
import type { BrushRect, Diagram } from "./types";

export interface BrushablePoint {
  id: string;
  birth: number;
  persistence: number;
  cellX: number;
  cellY: number;
}

/** Stable point ids: diagram label + index in pair order. */
export function brushablePoints(diagram: Diagram): BrushablePoint[] {
  return diagram.pairs
    .map((p, i) => ({
      id: `${diagram.time_label}#${i}`,
      birth: p.birth,
      persistence: p.persistence,
      cellX: p.cell_x,
      cellY: p.cell_y,
    }))
    .filter((p) => p.cellX >= 0 && p.cellY >= 0);
}

export function pointsInRect(points: BrushablePoint[],
                             rect: BrushRect): Set<string> {
  const selected = new Set<string>();
  for (const p of points) {
    if (p.birth >= rect.birthMin && p.birth <= rect.birthMax
        && p.persistence >= rect.persistenceMin
        && p.persistence <= rect.persistenceMax) {
      selected.add(p.id);
    }
  }
  return selected;
}

/**
 * The ringed map cells are exactly the image of the selection under the
 * diagram-to-cell mapping.
 */
export function ringedCells(points: BrushablePoint[],
                            selection: Set<string>): Array<[number, number]> {
  return points
    .filter((p) => selection.has(p.id))
    .map((p) => [p.cellX, p.cellY] as [number, number]);
}
