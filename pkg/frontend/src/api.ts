/**
 * Typed client for the /v1 what-if API.
 *
 * Every response is validated against a zod schema at the boundary, so the
 * rest of the app works with checked shapes only.  The fetch implementation
 * is injectable: tests pass an intercepted fake, the browser uses the real
 * one.  The client never computes model quantities; it only transports
 * whatever numbers the service returned.
 */

import { z } from "zod";

export const RecommendationSchema = z.object({
  scores: z.record(z.string(), z.number()),
  predicted_citations: z.record(z.string(), z.number()),
  recommended: z.string(),
  ranking: z.array(z.string()),
});
export type Recommendation = z.infer<typeof RecommendationSchema>;

export const RecommendResponseSchema = RecommendationSchema.extend({
  ignored_fields: z.array(z.string()),
});
export type RecommendResponse = z.infer<typeof RecommendResponseSchema>;

export const WhatIfResponseSchema = z.object({
  base: RecommendationSchema,
  variant: RecommendationSchema,
  deltas: z.record(z.string(), z.number()),
  citation_deltas: z.record(z.string(), z.number()),
  ignored_fields: z.array(z.string()),
});
export type WhatIfResponse = z.infer<typeof WhatIfResponseSchema>;

export const VocabularyResponseSchema = z.object({
  total: z.number().int(),
  offset: z.number().int(),
  limit: z.number().int(),
  fields: z.array(z.string()),
});
export type VocabularyResponse = z.infer<typeof VocabularyResponseSchema>;

export const CoefficientsResponseSchema = z.object({
  venue: z.string(),
  learner_kind: z.string(),
  coefficients: z.array(z.object({
    field: z.string(),
    weight: z.number(),
  })),
  venue_offset: z.number().optional(),
});
export type CoefficientsResponse = z.infer<typeof CoefficientsResponseSchema>;

export const VenuesResponseSchema = z.object({
  venues: z.array(z.string()),
});

export const ModelInfoSchema = z.object({
  format_version: z.number().int(),
  created_at: z.string().nullable(),
  learner_kind: z.string(),
  weighting: z.string(),
  target_transform: z.string(),
  venues: z.array(z.string()),
  n_features: z.number().int(),
  dataset_fingerprint: z.string(),
});
export type ModelInfo = z.infer<typeof ModelInfoSchema>;

/** The slice of the fetch contract the client relies on. */
export interface FetchResponseLike {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}

export interface FetchInit {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
  signal?: AbortSignal;
}

export type FetchLike = (url: string, init?: FetchInit) => Promise<FetchResponseLike>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export function isAbortError(err: unknown): boolean {
  return err instanceof Error && err.name === "AbortError";
}

async function errorDetail(response: FetchResponseLike): Promise<string> {
  try {
    const body = await response.json();
    if (body && typeof body === "object" && "detail" in body) {
      return JSON.stringify((body as { detail: unknown }).detail);
    }
    return JSON.stringify(body);
  } catch {
    return "(no body)";
  }
}

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(readonly baseUrl: string, fetchFn?: FetchLike) {
    this.fetchFn = fetchFn ?? ((url, init) => globalThis.fetch(url, init));
  }

  private async request<T>(schema: z.ZodType<T>, path: string,
                           init?: FetchInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(response.status,
                         `${path} failed (${response.status}): ` +
                         `${await errorDetail(response)}`);
    }
    return schema.parse(await response.json());
  }

  health(signal?: AbortSignal) {
    return this.request(z.object({ status: z.string(), model_version: z.number() }),
                        "/v1/health", { signal });
  }

  venues(signal?: AbortSignal) {
    return this.request(VenuesResponseSchema, "/v1/venues", { signal });
  }

  modelInfo(signal?: AbortSignal) {
    return this.request(ModelInfoSchema, "/v1/model", { signal });
  }

  vocabulary(q: string, limit: number, signal?: AbortSignal) {
    const params = new URLSearchParams({ q, limit: String(limit) });
    return this.request(VocabularyResponseSchema,
                        `/v1/vocabulary?${params}`, { signal });
  }

  coefficients(venue: string, top: number, signal?: AbortSignal) {
    const params = new URLSearchParams({ top: String(top) });
    return this.request(CoefficientsResponseSchema,
                        `/v1/coefficients/${encodeURIComponent(venue)}?${params}`,
                        { signal });
  }

  recommend(fields: string[], signal?: AbortSignal) {
    return this.request(RecommendResponseSchema, "/v1/recommend", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ fields }),
      signal,
    });
  }

  whatif(baseFields: string[], add: string[], remove: string[],
         signal?: AbortSignal) {
    return this.request(WhatIfResponseSchema, "/v1/whatif", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ base_fields: baseFields, add, remove }),
      signal,
    });
  }
}
