/** Shared types mirroring the service's JSON and text wire formats. */

export interface ScalarGrid {
  ncols: number;
  nrows: number;
  xOrigin: number;
  yOrigin: number;
  cellSizeM: number;
  nodata: number;
  /** row-major, row 0 = northernmost */
  values: Float64Array;
}

export interface GridStack {
  labels: string[];
  grids: ScalarGrid[];
}

export interface DiagramPair {
  birth: number;
  death: number;
  cell_x: number;
  cell_y: number;
  persistence: number;
  essential: boolean;
}

export interface DiagramMeta {
  ncols: number;
  nrows: number;
  x_origin: number;
  y_origin: number;
  cell_size_m: number;
}

export interface Diagram {
  time_label: string;
  pairs: DiagramPair[];
  meta?: DiagramMeta;
}

export interface DiagramBundle {
  scenario_id: string;
  fidelity: number;
  tau: number;
  resample_factor: number;
  sigma_cells: number;
  buckets: Diagram[];
  barycentre: Diagram;
}

export interface ResultSet {
  scenario_id: string;
  fidelity: number;
  raster_id: string;
  mosaic_id: string;
  diagrams_id: string;
  completed_stages: string[];
  completed_at: number | null;
}

export interface ScenarioEvent {
  type: string;
  data: Record<string, unknown> & {
    scenario_id?: string;
    fidelity?: number;
    stage?: string;
    seq?: number;
  };
}

export interface ScenarioForm {
  region: { ncols: number; nrows: number; cell_size_m?: number };
  species: string;
  disease: string;
  ladder?: number[];
}

/** One threshold step of the heatmap colormap. */
export interface ColormapStop {
  threshold: number;
  color: string; // #rrggbb
}

export interface MaximaMarker {
  cellX: number;
  cellY: number;
  value: number;       // birth of the pair
  persistence: number;
  /** bar height relative to the most persistent marker, in (0, 1] */
  height: number;
}

export interface BrushRect {
  birthMin: number;
  birthMax: number;
  persistenceMin: number;
  persistenceMax: number;
}
