/**
 * Heatmap rasterization: pure function from a cached grid and colormap
 * stops to an RGBA pixel buffer, one pixel per cell. Re-coloring after
 * a stop change is a repaint of cached data and never touches the
 * network; the canvas layer just blits the buffer scaled up.
 */
import { colorFor, parseColor, validateStops } from "./colormap";
import type { ColormapStop, ScalarGrid } from "./types";

export interface HeatmapImage {
  width: number;
  height: number;
  /** RGBA, row-major, alpha 0 for nodata and below-first-stop cells */
  pixels: Uint8ClampedArray;
}

export function renderHeatmap(grid: ScalarGrid,
                              stops: ColormapStop[]): HeatmapImage {
  validateStops(stops);
  const pixels = new Uint8ClampedArray(grid.ncols * grid.nrows * 4);
  for (let i = 0; i < grid.values.length; i++) {
    const value = grid.values[i];
    if (value === grid.nodata) {
      continue; // transparent
    }
    const color = colorFor(value, stops);
    if (color === null) {
      continue;
    }
    const [r, g, b] = parseColor(color);
    pixels[i * 4] = r;
    pixels[i * 4 + 1] = g;
    pixels[i * 4 + 2] = b;
    pixels[i * 4 + 3] = 255;
  }
  return { width: grid.ncols, height: grid.nrows, pixels };
}

/** The RGBA of one cell in a rendered image (for tests and tooltips). */
export function pixelAt(image: HeatmapImage, cellX: number,
                        cellY: number): [number, number, number, number] {
  const i = (cellY * image.width + cellX) * 4;
  return [image.pixels[i], image.pixels[i + 1], image.pixels[i + 2],
          image.pixels[i + 3]];
}
