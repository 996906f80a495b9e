/**
 * SSE subscription with exponential-backoff reconnect.
 *
 * The EventSource implementation and the timer are injected so the
 * reconnect policy is testable without a browser or a server.
 */
import type { ScenarioEvent } from "./types";

export interface EventSourceLike {
  addEventListener(type: string, listener: (evt: { data: string }) => void): void;
  // loose signature so the DOM EventSource satisfies this structurally
  onerror: ((this: any, evt: any) => unknown) | null;
  close(): void;
}

export type EventSourceFactory = (url: string) => EventSourceLike;
export type Scheduler = (fn: () => void, delayMs: number) => void;

export const EVENT_TYPES = [
  "stage", "rung_completed", "superseded", "fidelity_changed", "error",
] as const;

export const BACKOFF_BASE_MS = 500;
export const BACKOFF_CAP_MS = 30_000;

export class SSEClient {
  private source: EventSourceLike | null = null;
  private attempts = 0;
  private stopped = false;

  constructor(private factory: EventSourceFactory,
              private schedule: Scheduler = (fn, ms) => {
                setTimeout(fn, ms);
              }) {}

  /** Delay before reconnect attempt n (1-based): base * 2^(n-1), capped. */
  backoffDelay(attempt: number): number {
    return Math.min(BACKOFF_BASE_MS * 2 ** (attempt - 1), BACKOFF_CAP_MS);
  }

  connect(url: string, onEvent: (evt: ScenarioEvent) => void,
          onReconnect?: (attempt: number, delayMs: number) => void): void {
    this.stopped = false;
    const open = () => {
      if (this.stopped) {
        return;
      }
      this.source = this.factory(url);
      for (const type of EVENT_TYPES) {
        this.source.addEventListener(type, (evt) => {
          this.attempts = 0; // healthy stream resets the backoff
          try {
            onEvent({ type, data: JSON.parse(evt.data) });
          } catch {
            // malformed frame: skip
          }
        });
      }
      this.source.onerror = () => {
        if (this.stopped) {
          return;
        }
        this.source?.close();
        this.source = null;
        this.attempts += 1;
        const delay = this.backoffDelay(this.attempts);
        onReconnect?.(this.attempts, delay);
        this.schedule(open, delay);
      };
    };
    open();
  }

  close(): void {
    this.stopped = true;
    this.source?.close();
    this.source = null;
  }

  get connected(): boolean {
    return this.source !== null;
  }
}
