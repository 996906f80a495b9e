import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { brushablePoints, pointsInRect, ringedCells } from "../src/brush";
import { ControlRoomStore } from "../src/store";
import { fakeBackend, threePointDiagram } from "./helpers";

describe("brushing a synthetic 3-point diagram", () => {
  const diagram = threePointDiagram();
  const points = brushablePoints(diagram);

  it("selects nothing for an empty rectangle", () => {
    const selection = pointsInRect(points, {
      birthMin: 10, birthMax: 11, persistenceMin: 10, persistenceMax: 11,
    });
    expect(selection.size).toBe(0);
    expect(ringedCells(points, selection)).toEqual([]);
  });

  it("a rectangle covering all points rings every bar", () => {
    const selection = pointsInRect(points, {
      birthMin: 0, birthMax: 100, persistenceMin: 0, persistenceMax: 100,
    });
    expect(selection.size).toBe(3);
    expect(new Set(ringedCells(points, selection).map(String))).toEqual(
      new Set([[1, 1], [3, 0], [0, 2]].map(String)));
  });

  it("selecting one point rings exactly its cell", () => {
    // only the (birth 3.0, persistence 2.0) point falls in this window
    const selection = pointsInRect(points, {
      birthMin: 2.8, birthMax: 3.2, persistenceMin: 1.5, persistenceMax: 2.5,
    });
    expect(selection.size).toBe(1);
    expect(ringedCells(points, selection)).toEqual([[3, 0]]);
  });

  it("the ringed cells are always the image of the selection", () => {
    for (const rect of [
      { birthMin: 0, birthMax: 2.6, persistenceMin: 0, persistenceMax: 1 },
      { birthMin: 3.5, birthMax: 5, persistenceMin: 3, persistenceMax: 5 },
      { birthMin: 0, birthMax: 5, persistenceMin: 0, persistenceMax: 5 },
    ]) {
      const selection = pointsInRect(points, rect);
      const ringed = ringedCells(points, selection);
      expect(ringed.length).toBe(selection.size);
      for (const p of points) {
        const inRing = ringed.some(
          ([x, y]) => x === p.cellX && y === p.cellY);
        expect(inRing).toBe(selection.has(p.id));
      }
    }
  });

  it("barycentre points without cells are not brushable", () => {
    const withSentinel = {
      ...diagram,
      pairs: [...diagram.pairs, {
        birth: 3.5, death: 1.0, cell_x: -1, cell_y: -1,
        persistence: 2.5, essential: false,
      }],
    };
    expect(brushablePoints(withSentinel).length).toBe(3);
  });
});

describe("store-level brushing", () => {
  it("clearing the selection removes all rings", async () => {
    const backend = fakeBackend(() => 10);
    const store = new ControlRoomStore(new ApiClient("", backend.fetch));
    store.attachScenario("inc-test", "sc-test");
    await store.handleEvent({ type: "fidelity_changed",
                              data: { fidelity: 10 } });
    store.brush({ birthMin: 0, birthMax: 100,
                  persistenceMin: 0, persistenceMax: 100 });
    expect(store.ringedCells().length).toBe(3);
    store.clearBrush();
    expect(store.ringedCells()).toEqual([]);
    expect(store.state.brushSelection.size).toBe(0);
  });
});
