/**
 * Explorer state and scoring-request scheduling.
 *
 * The store owns the ordered field selection, the optional pinned baseline,
 * and the last successful API response; the view renders from those alone.
 * Field toggles are debounced (a burst becomes one request) and scoring
 * requests follow a latest-wins policy: issuing a new one aborts the
 * previous, so at most one is ever in flight.  A failed request raises a
 * banner and leaves the last good display untouched.
 */

import {
  ApiClient,
  CoefficientsResponse,
  ModelInfo,
  Recommendation,
  RecommendResponse,
  WhatIfResponse,
  isAbortError,
} from "./api.js";

export const DEBOUNCE_MS = 250;
export const SUGGESTION_PAGE = 50;
export const DETAIL_TOP_K = 20;
export const BANNER_UNREACHABLE =
  "Service unreachable; showing the last loaded results.";

export interface PinnedBaseline {
  fields: string[];
  response: Recommendation;
}

export type Display =
  | { kind: "recommend"; response: RecommendResponse }
  | { kind: "whatif"; response: WhatIfResponse };

export interface ExplorerState {
  venues: string[];
  modelInfo: ModelInfo | null;
  selectedFields: string[];
  pinned: PinnedBaseline | null;
  display: Display | null;
  displayedFields: string[];
  banner: string | null;
  loading: boolean;
  query: string;
  suggestions: string[];
  detailVenue: string | null;
  detail: CoefficientsResponse | null;
}

function initialState(): ExplorerState {
  return {
    venues: [],
    modelInfo: null,
    selectedFields: [],
    pinned: null,
    display: null,
    displayedFields: [],
    banner: null,
    loading: false,
    query: "",
    suggestions: [],
    detailVenue: null,
    detail: null,
  };
}

/** The recommendation block the current display shows (variant when pinned). */
export function displayedRecommendation(display: Display): Recommendation {
  return display.kind === "whatif" ? display.response.variant
                                   : display.response;
}

export class ExplorerStore {
  private state = initialState();
  private readonly listeners = new Set<() => void>();
  private debounceTimer: ReturnType<typeof setTimeout> | null = null;
  private scoring: AbortController | null = null;
  private suggesting: AbortController | null = null;
  private detailing: AbortController | null = null;

  constructor(private readonly api: ApiClient) {}

  getState(): ExplorerState {
    return this.state;
  }

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private setState(patch: Partial<ExplorerState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener();
  }

  /** Fetch static metadata, then score the (empty) initial selection. */
  async init(): Promise<void> {
    try {
      const [venues, modelInfo] = await Promise.all([
        this.api.venues(),
        this.api.modelInfo(),
      ]);
      this.setState({ venues: venues.venues, modelInfo, banner: null });
    } catch (err) {
      if (isAbortError(err)) return;
      this.setState({ banner: BANNER_UNREACHABLE });
      return;
    }
    await this.refreshNow();
  }

  /** Add the field if absent, drop it if present; refresh after a pause. */
  toggleField(name: string): void {
    const selected = this.state.selectedFields;
    const next = selected.includes(name)
      ? selected.filter((f) => f !== name)
      : [...selected, name];
    this.setState({ selectedFields: next });
    this.scheduleRefresh();
  }

  /** Add free-typed text as a field; the service flags unknown ones. */
  addField(name: string): void {
    const trimmed = name.trim();
    if (!trimmed) return;
    this.setState({ query: "", suggestions: [] });
    if (this.state.selectedFields.includes(trimmed)) return;
    this.toggleField(trimmed);
  }

  /** Snapshot the current display as the baseline for delta exploration. */
  pinBaseline(): void {
    const display = this.state.display;
    if (display === null) return;
    this.setState({
      pinned: {
        fields: [...this.state.displayedFields],
        response: displayedRecommendation(display),
      },
    });
    void this.refreshNow();
  }

  unpinBaseline(): void {
    if (this.state.pinned === null) return;
    this.setState({ pinned: null });
    void this.refreshNow();
  }

  setQuery(query: string): void {
    this.setState({ query });
    this.suggesting?.abort();
    if (!query.trim()) {
      this.setState({ suggestions: [] });
      return;
    }
    const controller = new AbortController();
    this.suggesting = controller;
    this.api.vocabulary(query, SUGGESTION_PAGE, controller.signal).then(
      (page) => {
        if (controller !== this.suggesting) return;
        const selected = new Set(this.state.selectedFields);
        this.setState({
          suggestions: page.fields.filter((f) => !selected.has(f)),
        });
      },
      (err) => {
        if (isAbortError(err) || controller !== this.suggesting) return;
        this.setState({ banner: BANNER_UNREACHABLE });
      });
  }

  selectVenue(venue: string | null): void {
    this.detailing?.abort();
    if (venue === null) {
      this.setState({ detailVenue: null, detail: null });
      return;
    }
    const controller = new AbortController();
    this.detailing = controller;
    this.setState({ detailVenue: venue });
    this.api.coefficients(venue, DETAIL_TOP_K, controller.signal).then(
      (detail) => {
        if (controller !== this.detailing) return;
        this.setState({ detail, banner: null });
      },
      (err) => {
        if (isAbortError(err) || controller !== this.detailing) return;
        this.setState({ banner: BANNER_UNREACHABLE });
      });
  }

  private scheduleRefresh(): void {
    if (this.debounceTimer !== null) clearTimeout(this.debounceTimer);
    this.setState({ loading: true });
    this.debounceTimer = setTimeout(() => {
      this.debounceTimer = null;
      void this.refreshNow();
    }, DEBOUNCE_MS);
  }

  /** Score the current selection immediately, aborting any earlier request. */
  async refreshNow(): Promise<void> {
    if (this.debounceTimer !== null) {
      clearTimeout(this.debounceTimer);
      this.debounceTimer = null;
    }
    this.scoring?.abort();
    const controller = new AbortController();
    this.scoring = controller;
    this.setState({ loading: true });
    const fields = [...this.state.selectedFields];
    const pinned = this.state.pinned;
    try {
      let display: Display;
      if (pinned !== null) {
        const base = pinned.fields;
        const add = fields.filter((f) => !base.includes(f));
        const remove = base.filter((f) => !fields.includes(f));
        const response = await this.api.whatif(base, add, remove,
                                               controller.signal);
        display = { kind: "whatif", response };
      } else {
        const response = await this.api.recommend(fields, controller.signal);
        display = { kind: "recommend", response };
      }
      if (controller !== this.scoring) return;
      this.setState({
        display,
        displayedFields: fields,
        banner: null,
        loading: false,
      });
    } catch (err) {
      if (isAbortError(err) || controller !== this.scoring) return;
      this.setState({ banner: BANNER_UNREACHABLE, loading: false });
    } finally {
      if (controller === this.scoring) this.scoring = null;
    }
  }
}
