/**
 * Intercepted-fetch fake of the /v1 service, backed by a real saved model
 * artifact (fixture_model.json).  It mirrors the service contract: scores
 * are vocabulary-indexed linear sums, recommended is the argmax, what-if
 * deltas are variant minus base, unknown fields are echoed in
 * ignored_fields, and overlapping add/remove is a 422.  Requests and
 * response payloads are recorded so tests can compare every displayed
 * number against what actually went over the (fake) wire.
 */

import { FetchInit, FetchLike, FetchResponseLike } from "../src/api.js";
import rawModel from "./fixture_model.json";

interface FixtureModel {
  learner_kind: string;
  venues: string[];
  vocabulary: string[];
  vocabulary_built_from: number;
  config: { target_transform: string; weighting: string };
  base_learners: Array<{ weights: number[]; intercept: number }>;
  per_venue_lambda: Record<string, number>;
  format_version: number;
  created_at: string | null;
  dataset_fingerprint: string;
}

export const FIXTURE_MODEL = rawModel as unknown as FixtureModel;

export interface RecordedRequest {
  method: string;
  path: string;
  query: Record<string, string>;
  body: unknown;
  aborted: () => boolean;
}

export interface RecordedResponse {
  path: string;
  body: unknown;
}

function abortError(): Error {
  const err = new Error("The operation was aborted.");
  err.name = "AbortError";
  return err;
}

function dedupe(names: string[]): string[] {
  return [...new Set(names)];
}

export class FakeServer {
  readonly requests: RecordedRequest[] = [];
  readonly responses: RecordedResponse[] = [];
  unreachable = false;
  private holding = false;
  private held: Array<{ resolve: () => void; reject: (err: Error) => void }> = [];

  constructor(private readonly model: FixtureModel = FIXTURE_MODEL) {
    if (model.learner_kind !== "T") {
      throw new Error("fake server only scores T-learner artifacts");
    }
  }

  /** Make scoring requests wait until release() so tests can overlap them. */
  hold(): void {
    this.holding = true;
  }

  release(): void {
    this.holding = false;
    const held = this.held;
    this.held = [];
    for (const entry of held) entry.resolve();
  }

  lastBody(pathPrefix: string): unknown {
    for (let i = this.responses.length - 1; i >= 0; i--) {
      if (this.responses[i].path.startsWith(pathPrefix)) {
        return this.responses[i].body;
      }
    }
    return undefined;
  }

  score(venueIndex: number, fields: string[]): number {
    const learner = this.model.base_learners[venueIndex];
    const indices = fields
      .map((f) => this.model.vocabulary.indexOf(f))
      .filter((i) => i >= 0)
      .sort((a, b) => a - b);
    let total = learner.intercept;
    for (const index of indices) total += learner.weights[index];
    return total;
  }

  private citations(score: number): number {
    return this.model.config.target_transform === "log1p"
      ? Math.expm1(score) : Math.exp(score);
  }

  recommendation(fields: string[]) {
    const scores: Record<string, number> = {};
    const citations: Record<string, number> = {};
    this.model.venues.forEach((venue, index) => {
      scores[venue] = this.score(index, fields);
      citations[venue] = this.citations(scores[venue]);
    });
    const ranking = [...this.model.venues]
      .sort((a, b) => scores[b] - scores[a]);
    return {
      scores,
      predicted_citations: citations,
      recommended: ranking[0],
      ranking,
    };
  }

  private ignored(fields: string[]): string[] {
    return fields.filter((f) => !this.model.vocabulary.includes(f));
  }

  private recommendBody(fields: string[]) {
    const deduped = dedupe(fields);
    return {
      ...this.recommendation(deduped),
      ignored_fields: this.ignored(deduped),
    };
  }

  private whatifBody(baseFields: string[], add: string[], remove: string[]) {
    const base = dedupe(baseFields);
    const removed = new Set(remove);
    const variant = dedupe([...base.filter((f) => !removed.has(f)), ...add]);
    const baseRec = this.recommendation(base);
    const variantRec = this.recommendation(variant);
    const deltas: Record<string, number> = {};
    const citationDeltas: Record<string, number> = {};
    for (const venue of this.model.venues) {
      deltas[venue] = variantRec.scores[venue] - baseRec.scores[venue];
      citationDeltas[venue] = variantRec.predicted_citations[venue]
        - baseRec.predicted_citations[venue];
    }
    return {
      base: baseRec,
      variant: variantRec,
      deltas,
      citation_deltas: citationDeltas,
      ignored_fields: dedupe([
        ...this.ignored(base),
        ...this.ignored(variant),
        ...remove.filter((f) => !this.model.vocabulary.includes(f)),
      ]),
    };
  }

  private coefficientsBody(venue: string, top: number) {
    const index = this.model.venues.indexOf(venue);
    const weights = this.model.base_learners[index].weights;
    const order = this.model.vocabulary
      .map((_, i) => i)
      .sort((a, b) => weights[b] - weights[a]);
    return {
      venue,
      learner_kind: this.model.learner_kind,
      coefficients: order.slice(0, top).map((i) => ({
        field: this.model.vocabulary[i],
        weight: weights[i],
      })),
    };
  }

  private route(path: string, query: Record<string, string>,
                body: unknown): { status: number; body: unknown } {
    if (path === "/v1/health") {
      return { status: 200, body: {
        status: "ok", model_version: this.model.format_version } };
    }
    if (path === "/v1/venues") {
      return { status: 200, body: { venues: [...this.model.venues] } };
    }
    if (path === "/v1/model") {
      return { status: 200, body: {
        format_version: this.model.format_version,
        created_at: this.model.created_at,
        learner_kind: this.model.learner_kind,
        weighting: this.model.config.weighting,
        target_transform: this.model.config.target_transform,
        venues: [...this.model.venues],
        n_features: this.model.vocabulary.length,
        vocabulary_built_from: this.model.vocabulary_built_from,
        per_venue_lambda: { ...this.model.per_venue_lambda },
        dataset_fingerprint: this.model.dataset_fingerprint,
      } };
    }
    if (path === "/v1/vocabulary") {
      const needle = (query.q ?? "").toLowerCase();
      const limit = Number(query.limit ?? "50");
      const offset = Number(query.offset ?? "0");
      const matches = needle
        ? this.model.vocabulary.filter((f) => f.toLowerCase().includes(needle))
        : [...this.model.vocabulary];
      return { status: 200, body: {
        total: matches.length,
        offset,
        limit,
        fields: matches.slice(offset, offset + limit),
      } };
    }
    if (path.startsWith("/v1/coefficients/")) {
      const venue = decodeURIComponent(path.slice("/v1/coefficients/".length));
      if (!this.model.venues.includes(venue)) {
        return { status: 404, body: { detail: `unknown venue '${venue}'` } };
      }
      return { status: 200,
               body: this.coefficientsBody(venue, Number(query.top ?? "30")) };
    }
    if (path === "/v1/recommend") {
      const request = body as { fields?: string[] };
      return { status: 200, body: this.recommendBody(request.fields ?? []) };
    }
    if (path === "/v1/whatif") {
      const request = body as {
        base_fields?: string[]; add?: string[]; remove?: string[] };
      const add = request.add ?? [];
      const remove = request.remove ?? [];
      const overlap = add.filter((f) => remove.includes(f));
      if (overlap.length > 0) {
        return { status: 422,
                 body: { detail: `add and remove overlap on ${overlap}` } };
      }
      return { status: 200,
               body: this.whatifBody(request.base_fields ?? [], add, remove) };
    }
    return { status: 404, body: { detail: `no route for ${path}` } };
  }

  readonly fetch: FetchLike = async (url: string, init?: FetchInit) => {
    if (this.unreachable) throw new TypeError("fetch failed");
    const signal = init?.signal;
    if (signal?.aborted) throw abortError();

    const parsed = new URL(url);
    const query: Record<string, string> = {};
    parsed.searchParams.forEach((value, key) => { query[key] = value; });
    const body = init?.body === undefined ? undefined : JSON.parse(init.body);
    this.requests.push({
      method: init?.method ?? "GET",
      path: parsed.pathname,
      query,
      body,
      aborted: () => signal?.aborted ?? false,
    });

    const scoring = parsed.pathname === "/v1/recommend"
      || parsed.pathname === "/v1/whatif";
    const result = this.route(parsed.pathname, query, body);
    // JSON wire round-trip: the client sees exactly these doubles.
    const wireBody = JSON.parse(JSON.stringify(result.body));

    if (this.holding && scoring) {
      await new Promise<void>((resolve, reject) => {
        const entry = { resolve, reject };
        this.held.push(entry);
        signal?.addEventListener("abort", () => reject(abortError()));
      });
    }
    // Only responses the client actually received count as delivered.
    if (result.status === 200) {
      this.responses.push({ path: parsed.pathname, body: wireBody });
    }

    const response: FetchResponseLike = {
      ok: result.status >= 200 && result.status < 300,
      status: result.status,
      json: async () => wireBody,
    };
    return response;
  };
}

/** Every number reachable anywhere inside a JSON payload. */
export function collectNumbers(payload: unknown, into = new Set<number>()): Set<number> {
  if (typeof payload === "number") {
    into.add(payload);
  } else if (Array.isArray(payload)) {
    for (const item of payload) collectNumbers(item, into);
  } else if (payload !== null && typeof payload === "object") {
    for (const value of Object.values(payload)) collectNumbers(value, into);
  }
  return into;
}
