/**
 * Browser wiring: canvas painting, form handling, and the live SSE
 * subscription. All decision logic lives in the store and the pure
 * modules; this file only adapts them to the DOM.
 */
import { ApiClient } from "./api";
import { SSEClient } from "./sse";
import { ControlRoomStore } from "./store";

const BASE_URL = "";

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`missing element #${id}`);
  }
  return found as T;
}

function paint(store: ControlRoomStore, canvas: HTMLCanvasElement): void {
  const image = store.renderCurrentHeatmap();
  const ctx = canvas.getContext("2d");
  if (!image || !ctx) {
    return;
  }
  const scale = Math.max(1, Math.floor(
    Math.min(canvas.width / image.width, canvas.height / image.height)));
  const raster = new ImageData(image.width, image.height);
  raster.data.set(image.pixels);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const off = new OffscreenCanvas(image.width, image.height);
  off.getContext("2d")!.putImageData(raster, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, 0, 0, image.width * scale, image.height * scale);

  for (const marker of store.currentMarkers()) {
    const x = (marker.cellX + 0.5) * scale;
    const y = (marker.cellY + 0.5) * scale;
    const h = 10 + 30 * marker.height;
    ctx.strokeStyle = "#222222";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(x, y);
    ctx.lineTo(x, y - h);
    ctx.stroke();
  }
  for (const [cx, cy] of store.ringedCells()) {
    ctx.strokeStyle = "#f0f";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc((cx + 0.5) * scale, (cy + 0.5) * scale, scale * 0.7, 0,
            2 * Math.PI);
    ctx.stroke();
  }
}

export function start(): void {
  const api = new ApiClient(BASE_URL, (url, init) =>
    fetch(url, init as RequestInit));
  const store = new ControlRoomStore(api);
  const sse = new SSEClient((url) => new EventSource(url));

  const canvas = el<HTMLCanvasElement>("map");
  const badge = el<HTMLSpanElement>("badge");
  const day = el<HTMLInputElement>("day");
  const status = el<HTMLSpanElement>("status");

  store.subscribe((state) => {
    badge.textContent = state.fidelityBadge === null
      ? "awaiting results"
      : `${state.fidelityBadge} members`;
    status.textContent = state.connected ? "live" : "reconnecting";
    day.max = String(Math.max(0, state.nDays - 1));
    day.value = String(state.dayIndex);
    paint(store, canvas);
  });

  el<HTMLFormElement>("scenario-form").addEventListener("submit",
                                                        async (evt) => {
    evt.preventDefault();
    const incidentId = el<HTMLInputElement>("incident-id").value.trim();
    const ladderText = el<HTMLInputElement>("ladder").value.trim();
    const scenarioId = await store.submitScenario(incidentId, {
      region: { ncols: 0, nrows: 0 },  // region comes from the incident
      species: "albopictus",
      disease: "chikungunya",
      ladder: ladderText
        ? ladderText.split(",").map((v) => Number(v.trim()))
        : undefined,
    });
    const errorBox = el<HTMLSpanElement>("form-error");
    errorBox.textContent = store.state.formError ?? "";
    if (scenarioId) {
      store.setConnected(true);
      sse.connect(api.eventsUrl(scenarioId),
                  (event) => void store.handleEvent(event),
                  () => store.setConnected(false));
    }
  });

  day.addEventListener("input", () => {
    void store.scrubTime(Number(day.value));
  });
  el<HTMLSelectElement>("preset").addEventListener("change", (evt) => {
    store.loadPreset((evt.target as HTMLSelectElement).value);
  });
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", start);
}
