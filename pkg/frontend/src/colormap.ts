/** Threshold colormaps for the R0 heatmap. */
import type { ColormapStop } from "./types";

/** Presets loadable by name in time-critical situations. */
export const PRESETS: Record<string, ColormapStop[]> = {
  // the classic risk ramp: low spread in green through high risk in red
  "green-red": [
    { threshold: 0.0, color: "#1a9850" },
    { threshold: 0.5, color: "#91cf60" },
    { threshold: 1.0, color: "#fee08b" },
    { threshold: 1.5, color: "#fc8d59" },
    { threshold: 2.0, color: "#d73027" },
  ],
  "outbreak-binary": [
    { threshold: 0.0, color: "#2b83ba" },
    { threshold: 1.0, color: "#d7191c" },
  ],
};

export function validateStops(stops: ColormapStop[]): void {
  if (stops.length === 0) {
    throw new Error("colormap needs at least one stop");
  }
  for (let i = 1; i < stops.length; i++) {
    if (stops[i].threshold <= stops[i - 1].threshold) {
      throw new Error("colormap thresholds must be strictly increasing");
    }
  }
  for (const stop of stops) {
    if (!/^#[0-9a-fA-F]{6}$/.test(stop.color)) {
      throw new Error(`bad color '${stop.color}'`);
    }
  }
}

/**
 * The color of the enclosing threshold interval: the last stop whose
 * threshold is <= value. Values below the first stop are unpainted
 * (null), like nodata.
 */
export function colorFor(value: number, stops: ColormapStop[]): string | null {
  let chosen: string | null = null;
  for (const stop of stops) {
    if (value >= stop.threshold) {
      chosen = stop.color;
    } else {
      break;
    }
  }
  return chosen;
}

export function parseColor(color: string): [number, number, number] {
  return [
    parseInt(color.slice(1, 3), 16),
    parseInt(color.slice(3, 5), 16),
    parseInt(color.slice(5, 7), 16),
  ];
}
