/**
 * HTTP client for the workbench service. Every response is validated
 * against the wire schema before it reaches the UI; every non-success
 * response is surfaced as an {@link ApiError} carrying the server's
 * single error object.
 */

import {
  ApiErrorDoc,
  ApiErrorSchema,
  CompiledSpec,
  CompiledSpecSchema,
  FitResultDoc,
  FitResultSchema,
  ModelDoc,
  ModelDocSchema,
  ModelSummary,
  ModelSummarySchema,
  ObservationsDoc,
  ObservationsSchema,
  RunSettings,
  SpeciesRecord,
  SpeciesRecordSchema,
  TimeSeriesDoc,
  TimeSeriesSchema,
  Violation,
  ViolationSchema,
} from "./types.js";
import { z } from "zod";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly payload: ApiErrorDoc,
  ) {
    super(payload.message);
    this.name = "ApiError";
  }
}

/** The surface the store talks to; the test fake implements it too. */
export interface WorkbenchApi {
  getModel(id: string): Promise<ModelDoc>;
  createModel(doc: ModelDoc): Promise<string>;
  putModel(doc: ModelDoc): Promise<void>;
  copyModel(id: string, newName: string): Promise<string>;
  listModels(query?: string): Promise<ModelSummary[]>;
  validateModel(id: string): Promise<{ valid: boolean; violations: Violation[] }>;
  compileModel(id: string): Promise<CompiledSpec>;
  simulate(id: string, settings: RunSettings): Promise<TimeSeriesDoc>;
  fit(
    id: string,
    observations: ObservationsDoc,
    free: string[],
    budget: number,
    dt?: number,
  ): Promise<FitResultDoc>;
  species(query: string): Promise<SpeciesRecord[]>;
  parseObservations(csv: string): Promise<ObservationsDoc>;
}

const ValidateResponseSchema = z.object({
  valid: z.boolean(),
  violations: z.array(ViolationSchema),
});

export class ApiClient implements WorkbenchApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const body = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, ApiErrorSchema.parse(body));
    }
    return body;
  }

  private async requestJson(path: string, method: string, payload: unknown): Promise<unknown> {
    return this.request(path, {
      method,
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  async health(): Promise<boolean> {
    const body = (await this.request("/health")) as { status?: string };
    return body.status === "ok";
  }

  async getModel(id: string): Promise<ModelDoc> {
    return ModelDocSchema.parse(await this.request(`/models/${encodeURIComponent(id)}`));
  }

  async createModel(doc: ModelDoc): Promise<string> {
    const body = (await this.requestJson("/models", "POST", doc)) as { id: string };
    return body.id;
  }

  async putModel(doc: ModelDoc): Promise<void> {
    await this.requestJson(`/models/${encodeURIComponent(doc.id)}`, "PUT", doc);
  }

  async copyModel(id: string, newName: string): Promise<string> {
    const body = (await this.requestJson(`/models/${encodeURIComponent(id)}/copy`, "POST", {
      new_name: newName,
    })) as { id: string };
    return body.id;
  }

  async listModels(query?: string): Promise<ModelSummary[]> {
    const suffix = query ? `?q=${encodeURIComponent(query)}` : "";
    const body = (await this.request(`/models${suffix}`)) as { models: unknown[] };
    return body.models.map((m) => ModelSummarySchema.parse(m));
  }

  async validateModel(id: string): Promise<{ valid: boolean; violations: Violation[] }> {
    return ValidateResponseSchema.parse(
      await this.requestJson(`/models/${encodeURIComponent(id)}/validate`, "POST", {}),
    );
  }

  async compileModel(id: string): Promise<CompiledSpec> {
    return CompiledSpecSchema.parse(
      await this.requestJson(`/models/${encodeURIComponent(id)}/compile`, "POST", {}),
    );
  }

  async simulate(id: string, settings: RunSettings): Promise<TimeSeriesDoc> {
    return TimeSeriesSchema.parse(
      await this.requestJson(`/models/${encodeURIComponent(id)}/simulate`, "POST", settings),
    );
  }

  async fit(
    id: string,
    observations: ObservationsDoc,
    free: string[],
    budget: number,
    dt?: number,
  ): Promise<FitResultDoc> {
    const payload: Record<string, unknown> = {
      observations: { times: observations.times, series: observations.series },
      free,
      budget,
    };
    if (dt !== undefined) payload.dt = dt;
    return FitResultSchema.parse(
      await this.requestJson(`/models/${encodeURIComponent(id)}/fit`, "POST", payload),
    );
  }

  async species(query: string): Promise<SpeciesRecord[]> {
    const body = (await this.request(`/species?q=${encodeURIComponent(query)}`)) as {
      species: unknown[];
    };
    return body.species.map((r) => SpeciesRecordSchema.parse(r));
  }

  async parseObservations(csv: string): Promise<ObservationsDoc> {
    return ObservationsSchema.parse(
      await this.request("/observations/parse", {
        method: "POST",
        headers: { "content-type": "text/csv" },
        body: csv,
      }),
    );
  }
}
