/** Thin client for the incident service's HTTP surface. */
import type { ResultSet, ScenarioForm } from "./types";

export interface ResponseLike {
  ok: boolean;
  status: number;
  text(): Promise<string>;
  json(): Promise<unknown>;
}

export type FetchLike = (url: string, init?: {
  method?: string;
  headers?: Record<string, string>;
  body?: string | Uint8Array;
}) => Promise<ResponseLike>;

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function orThrow(response: ResponseLike): Promise<ResponseLike> {
  if (!response.ok) {
    let detail = "";
    try {
      const body = (await response.json()) as { detail?: string };
      detail = body.detail ?? "";
    } catch {
      // non-JSON error body
    }
    throw new ApiError(response.status, detail);
  }
  return response;
}

export class ApiClient {
  constructor(private baseUrl: string, private fetchImpl: FetchLike) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await orThrow(await this.fetchImpl(this.baseUrl + path));
    return (await response.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await orThrow(await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    }));
    return (await response.json()) as T;
  }

  async createIncident(form: ScenarioForm): Promise<string> {
    const doc = await this.postJson<{ incident_id: string }>("/incidents", {
      kind: "mosquito",
      region: form.region,
      species: form.species,
      disease: form.disease,
      ladder: form.ladder,
    });
    return doc.incident_id;
  }

  async activate(incidentId: string): Promise<void> {
    await this.postJson(`/incidents/${incidentId}/activate`, {});
  }

  async submitScenario(incidentId: string,
                       ladder?: number[]): Promise<string> {
    const doc = await this.postJson<{ scenario_id: string }>(
      `/incidents/${incidentId}/scenarios`, ladder ? { ladder } : {});
    return doc.scenario_id;
  }

  getIncident(incidentId: string): Promise<{
    id: string; status: string; scenario_ids: string[]; ladder: number[];
  }> {
    return this.getJson(`/incidents/${incidentId}`);
  }

  getResult(scenarioId: string): Promise<ResultSet> {
    return this.getJson(`/scenarios/${scenarioId}/result`);
  }

  async fetchData(dataId: string): Promise<string> {
    const response = await orThrow(
      await this.fetchImpl(`${this.baseUrl}/data/${dataId}`));
    return response.text();
  }

  eventsUrl(scenarioId: string): string {
    return `${this.baseUrl}/scenarios/${scenarioId}/events`;
  }
}
