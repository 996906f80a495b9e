import { describe, expect, it } from "vitest";

import { colorFor, validateStops } from "../src/colormap";
import { parseGrid } from "../src/grids";
import { pixelAt, renderHeatmap } from "../src/heatmap";
import { gridText } from "./helpers";

const GREEN = { threshold: 0.0, color: "#00ff00" };
const RED = { threshold: 1.0, color: "#ff0000" };

describe("colorFor", () => {
  it("uses the enclosing threshold interval", () => {
    expect(colorFor(0.0, [GREEN, RED])).toBe("#00ff00");
    expect(colorFor(0.99, [GREEN, RED])).toBe("#00ff00");
    expect(colorFor(1.0, [GREEN, RED])).toBe("#ff0000");
  });

  it("values above the top stop take the top color", () => {
    expect(colorFor(999.0, [GREEN, RED])).toBe("#ff0000");
  });

  it("values below the first stop are unpainted", () => {
    expect(colorFor(-0.1, [GREEN, RED])).toBeNull();
  });

  it("validates stops", () => {
    expect(() => validateStops([])).toThrow();
    expect(() => validateStops([RED, GREEN])).toThrow();
    expect(() => validateStops([{ threshold: 0, color: "teal" }])).toThrow();
  });
});

describe("renderHeatmap", () => {
  it("an all-zero grid with a single 0-green stop is uniform green", () => {
    const grid = parseGrid(gridText(3, 2, [0, 0, 0, 0, 0, 0]));
    const image = renderHeatmap(grid, [GREEN]);
    for (let y = 0; y < 2; y++) {
      for (let x = 0; x < 3; x++) {
        expect(pixelAt(image, x, y)).toEqual([0, 255, 0, 255]);
      }
    }
  });

  it("nodata cells are transparent", () => {
    const grid = parseGrid(gridText(2, 1, [0.5, -9999.0]));
    const image = renderHeatmap(grid, [GREEN, RED]);
    expect(pixelAt(image, 0, 0)[3]).toBe(255);
    expect(pixelAt(image, 1, 0)[3]).toBe(0);
  });

  it("cells above the top stop take the top color", () => {
    const grid = parseGrid(gridText(2, 1, [0.2, 7.5]));
    const image = renderHeatmap(grid, [GREEN, RED]);
    expect(pixelAt(image, 0, 0)).toEqual([0, 255, 0, 255]);
    expect(pixelAt(image, 1, 0)).toEqual([255, 0, 0, 255]);
  });
});
