import { describe, expect, it } from "vitest";

import { BACKOFF_CAP_MS, EventSourceLike, SSEClient } from "../src/sse";
import type { ScenarioEvent } from "../src/types";

class FakeSource implements EventSourceLike {
  listeners = new Map<string, (evt: { data: string }) => void>();
  onerror: ((evt: unknown) => void) | null = null;
  closed = false;

  addEventListener(type: string, cb: (evt: { data: string }) => void): void {
    this.listeners.set(type, cb);
  }

  close(): void {
    this.closed = true;
  }

  emit(type: string, data: unknown): void {
    this.listeners.get(type)?.({ data: JSON.stringify(data) });
  }

  fail(): void {
    this.onerror?.(new Error("drop"));
  }
}

function rig() {
  const sources: FakeSource[] = [];
  const scheduled: Array<{ fn: () => void; delay: number }> = [];
  const client = new SSEClient(
    () => {
      const source = new FakeSource();
      sources.push(source);
      return source;
    },
    (fn, delay) => scheduled.push({ fn, delay }),
  );
  return { client, sources, scheduled };
}

describe("SSE client", () => {
  it("dispatches typed events with parsed payloads", () => {
    const { client, sources } = rig();
    const events: ScenarioEvent[] = [];
    client.connect("/scenarios/sc-1/events", (evt) => events.push(evt));
    sources[0].emit("stage", { stage: "simulate", fidelity: 10 });
    sources[0].emit("fidelity_changed", { fidelity: 10 });
    expect(events.map((e) => e.type)).toEqual(["stage", "fidelity_changed"]);
    expect(events[1].data.fidelity).toBe(10);
  });

  it("reconnects with exponential backoff and resets on traffic", () => {
    const { client, sources, scheduled } = rig();
    const delays: number[] = [];
    client.connect("/events", () => undefined,
                   (_attempt, delay) => delays.push(delay));

    sources[0].fail();
    expect(scheduled.length).toBe(1);
    expect(delays).toEqual([500]);
    scheduled[0].fn();                       // reconnect #1
    sources[1].fail();
    scheduled[1].fn();                       // reconnect #2
    sources[2].fail();
    expect(delays).toEqual([500, 1000, 2000]);

    scheduled[2].fn();
    sources[3].emit("stage", { stage: "mosaic" });   // healthy traffic
    sources[3].fail();
    expect(delays[delays.length - 1]).toBe(500);     // backoff reset
  });

  it("caps the backoff delay", () => {
    const { client } = rig();
    expect(client.backoffDelay(1)).toBe(500);
    expect(client.backoffDelay(10)).toBe(BACKOFF_CAP_MS);
  });

  it("close() stops reconnecting", () => {
    const { client, sources, scheduled } = rig();
    client.connect("/events", () => undefined);
    client.close();
    expect(sources[0].closed).toBe(true);
    sources[0].fail();
    expect(scheduled.length).toBe(0);
    expect(client.connected).toBe(false);
  });

  it("skips malformed frames", () => {
    const { client, sources } = rig();
    const events: ScenarioEvent[] = [];
    client.connect("/events", (evt) => events.push(evt));
    sources[0].listeners.get("stage")?.({ data: "{not json" });
    sources[0].emit("stage", { stage: "topo" });
    expect(events.length).toBe(1);
  });
});
