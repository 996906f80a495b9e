/** Canned wire payloads and an instrumented fetch for store tests. */
import type { FetchLike, ResponseLike } from "../src/api";
import type { Diagram, DiagramBundle, ResultSet } from "../src/types";

export function gridText(ncols: number, nrows: number,
                         values: number[]): string {
  const rows: string[] = [];
  for (let r = 0; r < nrows; r++) {
    rows.push(values.slice(r * ncols, (r + 1) * ncols).join(" "));
  }
  return [
    `ncols ${ncols}`,
    `nrows ${nrows}`,
    "xllcorner 0.0",
    "yllcorner 0.0",
    "cellsize 250.0",
    "NODATA_value -9999.0",
    ...rows,
  ].join("\n") + "\n";
}

export function stackText(layers: Array<[string, number, number, number[]]>):
    string {
  let out = `NLAYERS ${layers.length}\n`;
  for (const [label, ncols, nrows, values] of layers) {
    out += `LAYER ${label}\n` + gridText(ncols, nrows, values);
  }
  return out;
}

export function threePointDiagram(): Diagram {
  return {
    time_label: "day0",
    pairs: [
      { birth: 4.0, death: 0.0, cell_x: 1, cell_y: 1, persistence: 4.0,
        essential: true },
      { birth: 3.0, death: 1.0, cell_x: 3, cell_y: 0, persistence: 2.0,
        essential: false },
      { birth: 2.5, death: 2.0, cell_x: 0, cell_y: 2, persistence: 0.5,
        essential: false },
    ],
    meta: { ncols: 4, nrows: 4, x_origin: 0, y_origin: 0, cell_size_m: 125 },
  };
}

export function bundleJson(fidelity: number): DiagramBundle {
  return {
    scenario_id: "sc-test",
    fidelity,
    tau: 0.1,
    resample_factor: 2,
    sigma_cells: 1.0,
    buckets: [threePointDiagram()],
    barycentre: { time_label: "barycentre", pairs: [] },
  };
}

export function resultSet(fidelity: number): ResultSet {
  return {
    scenario_id: "sc-test",
    fidelity,
    raster_id: `raster-${fidelity}`,
    mosaic_id: `mosaic-${fidelity}`,
    diagrams_id: `diagrams-${fidelity}`,
    completed_stages: ["analysed", "mosaicked", "simulated"],
    completed_at: 100.0 * fidelity,
  };
}

export interface FakeBackend {
  fetch: FetchLike;
  calls: string[];
  dataFetches: () => number;
}

/** Serves results/mosaics/bundles for any fidelity; counts every call. */
export function fakeBackend(visibleFidelity: () => number): FakeBackend {
  const calls: string[] = [];

  const respond = (status: number, body: string): ResponseLike => ({
    ok: status >= 200 && status < 300,
    status,
    text: () => Promise.resolve(body),
    json: () => Promise.resolve(JSON.parse(body)),
  });

  const fetch: FetchLike = (url) => {
    calls.push(url);
    if (url.includes("/result")) {
      return Promise.resolve(respond(
        200, JSON.stringify(resultSet(visibleFidelity()))));
    }
    if (url.includes("/data/mosaic-")) {
      const day0 = [0.1, 0.4, 0.9, 1.4, 0.2, 0.6, 1.1, 1.9,
                    0.0, 0.3, 2.4, 0.8, 0.5, 0.7, 1.2, -9999.0];
      const day1 = day0.map((v) => (v === -9999.0 ? v : v * 1.1));
      return Promise.resolve(respond(200, stackText([
        ["day0:mean", 4, 4, day0],
        ["day1:mean", 4, 4, day1],
        ["day0:stddev", 4, 4, day0.map(() => 0.01)],
        ["day1:stddev", 4, 4, day0.map(() => 0.01)],
      ])));
    }
    if (url.includes("/data/diagrams-")) {
      const fidelity = Number(url.split("diagrams-")[1]);
      return Promise.resolve(respond(200, JSON.stringify(
        bundleJson(fidelity))));
    }
    if (url.includes("/scenarios") && url.endsWith("/scenarios")) {
      return Promise.resolve(respond(
        201, JSON.stringify({ scenario_id: "sc-test" })));
    }
    return Promise.resolve(respond(404, JSON.stringify(
      { detail: `no route for ${url}` })));
  };

  return {
    fetch,
    calls,
    dataFetches: () => calls.filter((u) => u.includes("/data/")).length,
  };
}
