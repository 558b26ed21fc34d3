/**
 * Pure state-to-view projection.
 *
 * Every number carried into the view is taken verbatim from an API payload;
 * this module only arranges, orders, and formats.  The one piece of local
 * arithmetic is presentation geometry: relative bar widths and the affine
 * rank-to-font-size map for the coefficient tag panel.
 */

import { Recommendation } from "./api.js";
import { Display, ExplorerState, displayedRecommendation } from "./state.js";

export const TAG_FONT_MAX_PX = 26;
export const TAG_FONT_MIN_PX = 12;
export const SUGGESTION_DISPLAY_LIMIT = 12;

export interface BarView {
  venue: string;
  citations: number;
  score: number;
  citationDelta: number | null;
  scoreDelta: number | null;
  recommended: boolean;
  widthPct: number;
}

export interface SelectedTagView {
  field: string;
  ignored: boolean;
}

export interface CoefficientTagView {
  field: string;
  weight: number;
  fontPx: number;
}

export interface DetailView {
  venue: string;
  learnerKind: string;
  tags: CoefficientTagView[];
  venueOffset: number | null;
}

export interface ModelInfoView {
  learnerKind: string;
  weighting: string;
  targetTransform: string;
  nFeatures: number;
}

export interface ViewModel {
  modelInfo: ModelInfoView | null;
  banner: string | null;
  loading: boolean;
  query: string;
  suggestions: string[];
  selectedTags: SelectedTagView[];
  bars: BarView[];
  recommended: string | null;
  pinnedFields: string[] | null;
  detail: DetailView | null;
}

/** Font size is affine in coefficient rank: the top tag gets the maximum,
 * the last the minimum, intermediate ranks fall on the line between.  */
export function tagFontPx(rank: number, count: number): number {
  if (count <= 1) return TAG_FONT_MAX_PX;
  const step = (TAG_FONT_MAX_PX - TAG_FONT_MIN_PX) / (count - 1);
  return TAG_FONT_MAX_PX - rank * step;
}

function venueOrder(state: ExplorerState, rec: Recommendation): string[] {
  return state.venues.length > 0 ? state.venues : Object.keys(rec.scores);
}

function buildBars(state: ExplorerState, display: Display): BarView[] {
  const rec = displayedRecommendation(display);
  const venues = venueOrder(state, rec);
  const maxCitations = Math.max(...venues.map((v) => rec.predicted_citations[v] ?? 0));
  return venues.map((venue) => {
    const citations = rec.predicted_citations[venue] ?? 0;
    return {
      venue,
      citations,
      score: rec.scores[venue] ?? 0,
      citationDelta: display.kind === "whatif"
        ? display.response.citation_deltas[venue] ?? 0 : null,
      scoreDelta: display.kind === "whatif"
        ? display.response.deltas[venue] ?? 0 : null,
      recommended: venue === rec.recommended,
      widthPct: maxCitations > 0
        ? Math.max(0, citations) / maxCitations * 100 : 0,
    };
  });
}

export function buildViewModel(state: ExplorerState): ViewModel {
  const display = state.display;
  const ignored = new Set(display?.response.ignored_fields ?? []);
  return {
    modelInfo: state.modelInfo === null ? null : {
      learnerKind: state.modelInfo.learner_kind,
      weighting: state.modelInfo.weighting,
      targetTransform: state.modelInfo.target_transform,
      nFeatures: state.modelInfo.n_features,
    },
    banner: state.banner,
    loading: state.loading,
    query: state.query,
    suggestions: state.suggestions.slice(0, SUGGESTION_DISPLAY_LIMIT),
    selectedTags: state.selectedFields.map((field) => ({
      field,
      ignored: ignored.has(field),
    })),
    bars: display === null ? [] : buildBars(state, display),
    recommended: display === null
      ? null : displayedRecommendation(display).recommended,
    pinnedFields: state.pinned === null ? null : state.pinned.fields,
    detail: state.detail === null ? null : {
      venue: state.detail.venue,
      learnerKind: state.detail.learner_kind,
      tags: state.detail.coefficients.map((entry, rank) => ({
        field: entry.field,
        weight: entry.weight,
        fontPx: tagFontPx(rank, state.detail!.coefficients.length),
      })),
      venueOffset: state.detail.venue_offset ?? null,
    },
  };
}

export function formatCitations(x: number): string {
  return x.toFixed(2);
}

export function formatScore(x: number): string {
  return x.toFixed(4);
}

export function formatSigned(x: number, digits: number): string {
  const text = x.toFixed(digits);
  return x >= 0 && !text.startsWith("-") ? `+${text}` : text;
}

export function formatWeight(x: number): string {
  return x.toFixed(3);
}
