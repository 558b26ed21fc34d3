import { describe, expect, it } from "vitest";

import { RecommendResponse } from "../src/api.js";
import { ExplorerState } from "../src/state.js";
import { TAG_FONT_MAX_PX, TAG_FONT_MIN_PX, buildViewModel, formatSigned,
         tagFontPx } from "../src/view.js";

function stateWith(overrides: Partial<ExplorerState>): ExplorerState {
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
    ...overrides,
  };
}

function recommendDisplay(scores: Record<string, number>,
                          citations: Record<string, number>,
                          recommended: string): ExplorerState["display"] {
  const response: RecommendResponse = {
    scores,
    predicted_citations: citations,
    recommended,
    ranking: Object.keys(scores),
    ignored_fields: [],
  };
  return { kind: "recommend", response };
}

describe("tagFontPx", () => {
  it("is affine in rank from the maximum down to the minimum", () => {
    const count = 20;
    const sizes = Array.from({ length: count }, (_, i) => tagFontPx(i, count));
    expect(sizes[0]).toBe(TAG_FONT_MAX_PX);
    expect(sizes[count - 1]).toBe(TAG_FONT_MIN_PX);
    const step = sizes[0] - sizes[1];
    for (let i = 1; i < count; i++) {
      expect(sizes[i - 1] - sizes[i]).toBeCloseTo(step, 12);
    }
  });

  it("gives a single tag the maximum size", () => {
    expect(tagFontPx(0, 1)).toBe(TAG_FONT_MAX_PX);
    expect(tagFontPx(0, 0)).toBe(TAG_FONT_MAX_PX);
  });
});

describe("formatSigned", () => {
  it("prefixes non-negative values with a plus", () => {
    expect(formatSigned(1.5, 2)).toBe("+1.50");
    expect(formatSigned(0, 2)).toBe("+0.00");
    expect(formatSigned(-1.5, 2)).toBe("-1.50");
    expect(formatSigned(0.00004, 4)).toBe("+0.0000");
  });
});

describe("buildViewModel", () => {
  it("orders bars by the served venue list and scales by max citations", () => {
    const state = stateWith({
      venues: ["B", "A"],
      display: recommendDisplay({ A: 1.0, B: 2.0 }, { A: 10.0, B: 40.0 }, "B"),
    });
    const vm = buildViewModel(state);
    expect(vm.bars.map((b) => b.venue)).toEqual(["B", "A"]);
    expect(vm.bars[0].widthPct).toBe(100);
    expect(vm.bars[1].widthPct).toBe(25);
    expect(vm.bars[0].recommended).toBe(true);
    expect(vm.bars[1].recommended).toBe(false);
    expect(vm.recommended).toBe("B");
  });

  it("clamps negative citation predictions to zero-width bars", () => {
    const state = stateWith({
      venues: ["A", "B"],
      display: recommendDisplay({ A: -2.0, B: 1.0 }, { A: -0.8, B: 1.7 }, "B"),
    });
    const vm = buildViewModel(state);
    expect(vm.bars[0].widthPct).toBe(0);
    expect(vm.bars[0].citations).toBe(-0.8);
  });

  it("marks selected fields the service ignored", () => {
    const display = recommendDisplay({ A: 1.0 }, { A: 1.7 }, "A");
    display!.response.ignored_fields = ["ghost"];
    const state = stateWith({
      venues: ["A"],
      selectedFields: ["Deep learning", "ghost"],
      display,
    });
    const vm = buildViewModel(state);
    expect(vm.selectedTags).toEqual([
      { field: "Deep learning", ignored: false },
      { field: "ghost", ignored: true },
    ]);
  });

  it("carries the venue offset through for pooled-model details", () => {
    const state = stateWith({
      detail: {
        venue: "A",
        learner_kind: "S",
        coefficients: [{ field: "x", weight: 0.5 }],
        venue_offset: -0.25,
      },
    });
    const vm = buildViewModel(state);
    expect(vm.detail?.venueOffset).toBe(-0.25);
    expect(vm.detail?.tags).toEqual([
      { field: "x", weight: 0.5, fontPx: TAG_FONT_MAX_PX },
    ]);
  });

  it("omits the venue offset for per-venue models", () => {
    const state = stateWith({
      detail: {
        venue: "A",
        learner_kind: "T",
        coefficients: [{ field: "x", weight: 0.5 }],
      },
    });
    expect(buildViewModel(state).detail?.venueOffset).toBeNull();
  });

  it("renders no bars without a display", () => {
    const vm = buildViewModel(stateWith({}));
    expect(vm.bars).toEqual([]);
    expect(vm.recommended).toBeNull();
  });
});
