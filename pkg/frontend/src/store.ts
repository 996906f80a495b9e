/**
 * Control-room view state.
 *
 * Invariants owned here:
 *  - the fidelity badge never decreases for a fixed scenario session,
 *    whatever order SSE events arrive in;
 *  - colormap edits repaint cached data and cause zero network requests;
 *  - result layers are fetched with request coalescing: at most one
 *    in-flight fetch per data id, rapid scrubs share it;
 *  - the ringed map cells are exactly the image of the brush selection.
 */
import { ApiClient, ApiError } from "./api";
import { brushablePoints, pointsInRect, ringedCells } from "./brush";
import { validateStops, PRESETS } from "./colormap";
import { dayCount, dayMean, parseStack } from "./grids";
import { HeatmapImage, renderHeatmap } from "./heatmap";
import { overlayMaxima } from "./maxima";
import type {
  BrushRect, ColormapStop, Diagram, DiagramBundle, GridStack, MaximaMarker,
  ResultSet, ScalarGrid, ScenarioEvent, ScenarioForm,
} from "./types";

export interface ViewState {
  incidentId: string | null;
  scenarioId: string | null;
  dayIndex: number;
  nDays: number;
  colormapStops: ColormapStop[];
  topK: number;
  brushSelection: Set<string>;
  fidelityBadge: number | null;
  stageProgress: Record<number, string>;
  formError: string | null;
  connected: boolean;
}

type Listener = (state: ViewState) => void;

export class ControlRoomStore {
  readonly state: ViewState = {
    incidentId: null,
    scenarioId: null,
    dayIndex: 0,
    nDays: 0,
    colormapStops: PRESETS["green-red"],
    topK: 5,
    brushSelection: new Set(),
    fidelityBadge: null,
    stageProgress: {},
    formError: null,
    connected: false,
  };

  private result: ResultSet | null = null;
  private mosaic: GridStack | null = null;
  private bundle: DiagramBundle | null = null;
  private dataCache = new Map<string, string>();
  private inflight = new Map<string, Promise<string>>();
  private listeners: Listener[] = [];

  constructor(private api: ApiClient) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  // -- scenario submission -------------------------------------------------

  async submitScenario(incidentId: string,
                       form: ScenarioForm): Promise<string | null> {
    this.state.formError = null;
    try {
      this.state.incidentId = incidentId;
      const scenarioId = await this.api.submitScenario(incidentId,
                                                       form.ladder);
      this.state.scenarioId = scenarioId;
      this.notify();
      return scenarioId;
    } catch (err) {
      this.state.formError =
        err instanceof ApiError ? err.detail || err.message : String(err);
      this.notify();
      return null;
    }
  }

  /** Attach to an already-running scenario (e.g. auto-created ones). */
  attachScenario(incidentId: string, scenarioId: string): void {
    this.state.incidentId = incidentId;
    this.state.scenarioId = scenarioId;
    this.notify();
  }

  // -- SSE ingestion ----------------------------------------------------------

  async handleEvent(evt: ScenarioEvent): Promise<void> {
    if (evt.type === "stage") {
      const fidelity = evt.data.fidelity as number | undefined;
      const stage = evt.data.stage as string | undefined;
      if (fidelity !== undefined && stage) {
        this.state.stageProgress[fidelity] = stage;
        this.notify();
      }
      return;
    }
    if (evt.type === "fidelity_changed") {
      const fidelity = evt.data.fidelity as number | undefined;
      if (fidelity === undefined) {
        return;
      }
      const badge = this.state.fidelityBadge;
      if (badge !== null && fidelity <= badge) {
        return; // stale or out-of-order: the badge is monotone
      }
      this.state.fidelityBadge = fidelity;
      this.notify();
      await this.refreshResult();
    }
  }

  setConnected(connected: boolean): void {
    this.state.connected = connected;
    this.notify();
  }

  // -- data loading ---------------------------------------------------------------

  private loadData(dataId: string): Promise<string> {
    const cached = this.dataCache.get(dataId);
    if (cached !== undefined) {
      return Promise.resolve(cached);
    }
    const pending = this.inflight.get(dataId);
    if (pending !== undefined) {
      return pending; // coalesce: one in-flight fetch per layer
    }
    const promise = this.api.fetchData(dataId).then((text) => {
      this.dataCache.set(dataId, text);
      this.inflight.delete(dataId);
      return text;
    }, (err) => {
      this.inflight.delete(dataId);
      throw err;
    });
    this.inflight.set(dataId, promise);
    return promise;
  }

  async refreshResult(): Promise<void> {
    if (this.state.scenarioId === null) {
      return;
    }
    const result = await this.api.getResult(this.state.scenarioId);
    this.result = result;
    const [mosaicText, bundleText] = await Promise.all([
      this.loadData(result.mosaic_id),
      this.loadData(result.diagrams_id),
    ]);
    this.mosaic = parseStack(mosaicText);
    this.bundle = JSON.parse(bundleText) as DiagramBundle;
    this.state.nDays = dayCount(this.mosaic);
    if (this.state.dayIndex >= this.state.nDays) {
      this.state.dayIndex = Math.max(0, this.state.nDays - 1);
    }
    this.notify();
  }

  // -- time scrubbing ----------------------------------------------------------------

  async scrubTime(dayIndex: number): Promise<void> {
    const clamped = Math.max(0, Math.min(
      dayIndex, Math.max(0, this.state.nDays - 1)));
    this.state.dayIndex = clamped;
    this.notify();
    // layers load once per result set; rapid scrubs share the fetch
    if (this.mosaic === null && this.result !== null) {
      await Promise.all([
        this.loadData(this.result.mosaic_id),
        this.loadData(this.result.diagrams_id),
      ]);
    }
  }

  // -- derived views (all pure over cached data) -----------------------------------------

  currentGrid(): ScalarGrid | null {
    if (this.mosaic === null) {
      return null;
    }
    return dayMean(this.mosaic, this.state.dayIndex);
  }

  currentDiagram(): Diagram | null {
    if (this.bundle === null || this.bundle.buckets.length === 0) {
      return null;
    }
    const bucketSize = Math.max(1, Math.ceil(
      this.state.nDays / this.bundle.buckets.length));
    const index = Math.min(Math.floor(this.state.dayIndex / bucketSize),
                           this.bundle.buckets.length - 1);
    return this.bundle.buckets[index];
  }

  setColormapStops(stops: ColormapStop[]): void {
    validateStops(stops);
    this.state.colormapStops = stops;
    this.notify(); // repaint only: no fetch happens here
  }

  loadPreset(name: string): void {
    const stops = PRESETS[name];
    if (!stops) {
      throw new Error(`unknown colormap preset '${name}'`);
    }
    this.setColormapStops(stops);
  }

  renderCurrentHeatmap(): HeatmapImage | null {
    const grid = this.currentGrid();
    if (grid === null) {
      return null;
    }
    return renderHeatmap(grid, this.state.colormapStops);
  }

  currentMarkers(): MaximaMarker[] {
    const diagram = this.currentDiagram();
    if (diagram === null) {
      return [];
    }
    return overlayMaxima(diagram, this.state.topK);
  }

  // -- brushing ---------------------------------------------------------------------------

  brush(rect: BrushRect): void {
    const diagram = this.currentDiagram();
    if (diagram === null) {
      return;
    }
    this.state.brushSelection = pointsInRect(brushablePoints(diagram), rect);
    this.notify();
  }

  clearBrush(): void {
    this.state.brushSelection = new Set();
    this.notify();
  }

  ringedCells(): Array<[number, number]> {
    const diagram = this.currentDiagram();
    if (diagram === null) {
      return [];
    }
    return ringedCells(brushablePoints(diagram), this.state.brushSelection);
  }
}
