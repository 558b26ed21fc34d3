/**
 * Rendered-DOM checks driven through the real store, renderer, and event
 * wiring against the intercepted-fetch fake service: the highlighted venue
 * is always the argmax of what is on screen, toggling a field and back
 * restores the exact prior markup, and every number on screen carries the
 * exact value of some field of the payload the fake delivered.
 */

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { ExplorerUi, buildSkeleton, render, wire } from "../src/dom.js";
import { BANNER_UNREACHABLE, DEBOUNCE_MS, DETAIL_TOP_K,
         ExplorerStore } from "../src/state.js";
import { buildViewModel, formatCitations, formatScore, formatSigned,
         formatWeight, tagFontPx } from "../src/view.js";
import { FakeServer, collectNumbers } from "./fake_server.js";

function mount() {
  document.body.innerHTML = '<div id="app"></div>';
  const server = new FakeServer();
  const store = new ExplorerStore(new ApiClient("http://fake", server.fetch));
  const ui = buildSkeleton(document.getElementById("app")!);
  wire(ui, {
    onQuery: (query) => store.setQuery(query),
    onAddField: (name) => store.addField(name),
    onToggleField: (name) => store.toggleField(name),
    onPin: () => store.pinBaseline(),
    onUnpin: () => store.unpinBaseline(),
    onSelectVenue: (venue) => store.selectVenue(venue),
  });
  store.subscribe(() => render(ui, buildViewModel(store.getState())));
  render(ui, buildViewModel(store.getState()));
  return { server, store, ui };
}

function setSelection(store: ExplorerStore, target: string[]): void {
  for (const field of [...store.getState().selectedFields]) {
    if (!target.includes(field)) store.toggleField(field);
  }
  for (const field of target) {
    if (!store.getState().selectedFields.includes(field)) {
      store.toggleField(field);
    }
  }
}

function displayedScores(): Map<string, number> {
  const scores = new Map<string, number>();
  for (const row of document.querySelectorAll<HTMLElement>("li.venue-bar")) {
    const score = row.querySelector<HTMLElement>(".num.score")!;
    scores.set(row.dataset.venue!, Number(score.dataset.value));
  }
  return scores;
}

function highlightedVenue(): string | null {
  const row = document.querySelector<HTMLElement>("li.venue-bar.recommended");
  return row?.dataset.venue ?? null;
}

function click(element: Element): void {
  element.dispatchEvent(new MouseEvent("click", { bubbles: true }));
}

const flush = () => vi.advanceTimersByTimeAsync(0);

beforeEach(() => {
  vi.useFakeTimers();
});

afterEach(() => {
  vi.useRealTimers();
});

describe("recommended highlight", () => {
  it("always marks exactly the argmax of the displayed scores", async () => {
    const { store } = mount();
    await store.init();
    const selections = [
      [],
      ["Deep learning"],
      ["Game theory", "Satisfiability"],
      ["Data mining", "Recommender system", "no such field"],
      ["Epistemic logic", "Belief revision", "Heuristic search"],
      ["Deep learning", "Convolutional neural network", "Generative model"],
    ];
    for (const fields of selections) {
      setSelection(store, fields);
      await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);

      const scores = displayedScores();
      expect(scores.size).toBeGreaterThan(0);
      expect(document.querySelectorAll("li.venue-bar.recommended"))
        .toHaveLength(1);
      const highlighted = highlightedVenue();
      expect(highlighted).not.toBeNull();
      expect(scores.get(highlighted!)).toBe(Math.max(...scores.values()));
    }
  });

  it("keeps the highlight consistent in pinned what-if mode", async () => {
    const { store, ui } = mount();
    await store.init();
    setSelection(store, ["Game theory"]);
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    click(ui.pinButton);
    await flush();
    store.toggleField("Deep learning");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);

    const scores = displayedScores();
    expect(scores.get(highlightedVenue()!)).toBe(Math.max(...scores.values()));
  });
});

describe("display restoration", () => {
  it("toggling a field and toggling it back restores the exact markup", async () => {
    const { store, ui } = mount();
    await store.init();
    setSelection(store, ["Game theory", "Data mining"]);
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    const priorBars = ui.barsEl.innerHTML;
    const priorTags = ui.tagsEl.innerHTML;

    store.toggleField("Deep learning");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    expect(ui.barsEl.innerHTML).not.toBe(priorBars);

    store.toggleField("Deep learning");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    expect(ui.barsEl.innerHTML).toBe(priorBars);
    expect(ui.tagsEl.innerHTML).toBe(priorTags);
  });

  it("restores the exact zero-delta markup in pinned mode", async () => {
    const { store, ui } = mount();
    await store.init();
    setSelection(store, ["Game theory"]);
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    store.pinBaseline();
    await flush();
    const priorBars = ui.barsEl.innerHTML;

    store.toggleField("Deep learning");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    expect(ui.barsEl.innerHTML).not.toBe(priorBars);

    store.toggleField("Deep learning");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    expect(ui.barsEl.innerHTML).toBe(priorBars);
  });
});

describe("payload fidelity", () => {
  const formatters: Array<[string, (x: number) => string]> = [
    ["citations", formatCitations],
    ["citation-delta", (x) => formatSigned(x, 2)],
    ["score-delta", (x) => formatSigned(x, 4)],
    ["score", formatScore],
    ["weight", formatWeight],
    ["venue-offset-value", formatScore],
    ["n-features", (x) => String(x)],
  ];

  function auditRegion(region: Element, payload: unknown,
                       expectedCount: number): void {
    const allowed = collectNumbers(payload);
    const numbers = region.querySelectorAll<HTMLElement>("[data-value]");
    expect(numbers.length).toBe(expectedCount);
    for (const element of numbers) {
      const value = Number(element.dataset.value);
      expect(allowed.has(value)).toBe(true);
      const entry = formatters.find(([cls]) => element.classList.contains(cls));
      expect(entry).toBeDefined();
      expect(element.textContent).toBe(entry![1](value));
    }
  }

  it("every number on screen is a verbatim payload value (recommend)", async () => {
    const { server, store, ui } = mount();
    await store.init();
    setSelection(store, ["Deep learning", "Game theory"]);
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);

    auditRegion(ui.barsEl, server.lastBody("/v1/recommend"), 5 * 2);
    auditRegion(ui.modelInfoEl, server.lastBody("/v1/model"), 1);
  });

  it("every number on screen is a verbatim payload value (what-if + detail)", async () => {
    const { server, store, ui } = mount();
    await store.init();
    setSelection(store, ["Game theory"]);
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    store.pinBaseline();
    await flush();
    store.toggleField("Deep learning");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    click(document.querySelector('li[data-venue="NeurIPS"]')!);
    await flush();

    auditRegion(ui.barsEl, server.lastBody("/v1/whatif"), 5 * 4);
    auditRegion(ui.detailEl, server.lastBody("/v1/coefficients/NeurIPS"),
                DETAIL_TOP_K);
  });

  it("the empty selection displays the intercept-level payload", async () => {
    const { server, store, ui } = mount();
    await store.init();
    expect(document.querySelectorAll("li.venue-bar")).toHaveLength(5);
    auditRegion(ui.barsEl, server.lastBody("/v1/recommend"), 5 * 2);
  });
});

describe("service failures", () => {
  it("shows a non-blocking banner and keeps the last display", async () => {
    const { server, store, ui } = mount();
    await store.init();
    setSelection(store, ["Deep learning"]);
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    const priorBars = ui.barsEl.innerHTML;

    server.unreachable = true;
    store.toggleField("Data mining");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);

    expect(ui.bannerEl.hidden).toBe(false);
    expect(ui.bannerEl.textContent).toBe(BANNER_UNREACHABLE);
    expect(ui.bannerEl.getAttribute("role")).toBe("alert");
    expect(ui.barsEl.innerHTML).toBe(priorBars);

    server.unreachable = false;
    store.toggleField("Data mining");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    expect(ui.bannerEl.hidden).toBe(true);
    expect(ui.barsEl.innerHTML).toBe(priorBars);
  });
});

describe("field tags", () => {
  it("flags unknown fields inline once the service reports them", async () => {
    const { store, ui } = mount();
    await store.init();
    store.addField("Totally made up topic");
    store.addField("Deep learning");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);

    const ghost = ui.tagsEl.querySelector(
      'li[data-field="Totally made up topic"]')!;
    expect(ghost.classList.contains("ignored")).toBe(true);
    expect(ghost.querySelector(".warning-chip")!.textContent)
      .toBe("unknown field");
    const known = ui.tagsEl.querySelector('li[data-field="Deep learning"]')!;
    expect(known.classList.contains("ignored")).toBe(false);
    expect(known.querySelector(".warning-chip")).toBeNull();
  });

  it("removes a field when its tag button is clicked", async () => {
    const { store, ui } = mount();
    await store.init();
    setSelection(store, ["Deep learning", "Game theory"]);
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);

    click(ui.tagsEl.querySelector(
      'li[data-field="Deep learning"] button.tag-remove')!);
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    expect(store.getState().selectedFields).toEqual(["Game theory"]);
    expect(ui.tagsEl.querySelector('li[data-field="Deep learning"]'))
      .toBeNull();
  });
});

describe("autocomplete", () => {
  it("renders only suggestions from the vocabulary response", async () => {
    const { server, store, ui } = mount();
    await store.init();
    ui.searchInput.value = "network";
    ui.searchInput.dispatchEvent(new Event("input", { bubbles: true }));
    await flush();

    const payload = server.lastBody("/v1/vocabulary") as { fields: string[] };
    const buttons = [...ui.suggestionsEl.querySelectorAll("button")];
    expect(buttons.length).toBeGreaterThan(0);
    for (const button of buttons) {
      expect(payload.fields).toContain(button.textContent);
    }
  });

  it("clicking a suggestion selects the field and clears the query", async () => {
    const { store, ui } = mount();
    await store.init();
    ui.searchInput.value = "deep";
    ui.searchInput.dispatchEvent(new Event("input", { bubbles: true }));
    await flush();

    const first = ui.suggestionsEl.querySelector("button")!;
    const field = first.textContent!;
    click(first);
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);

    expect(store.getState().selectedFields).toContain(field);
    expect(ui.searchInput.value).toBe("");
    expect(ui.suggestionsEl.children).toHaveLength(0);
    expect(ui.tagsEl.querySelector(`li[data-field="${field}"]`)).not.toBeNull();
  });

  it("pressing enter adds the typed text as a field", async () => {
    const { store, ui } = mount();
    await store.init();
    ui.searchInput.value = "Data mining";
    ui.searchInput.dispatchEvent(
      new KeyboardEvent("keydown", { key: "Enter", bubbles: true }));
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    expect(store.getState().selectedFields).toEqual(["Data mining"]);
  });
});

describe("venue detail panel", () => {
  it("opens on bar click with rank-sized coefficient tags", async () => {
    const { server, store, ui } = mount();
    await store.init();
    click(document.querySelector('li[data-venue="NeurIPS"]')!);
    await flush();

    expect(ui.detailEl.hidden).toBe(false);
    expect(ui.detailTitleEl.textContent)
      .toBe("NeurIPS coefficients (T-learner)");

    const payload = server.lastBody("/v1/coefficients/NeurIPS") as {
      coefficients: Array<{ field: string; weight: number }> };
    const tags = [...ui.coefTagsEl.querySelectorAll("li.coef-tag")];
    expect(tags).toHaveLength(DETAIL_TOP_K);

    tags.forEach((tag, rank) => {
      const name = tag.querySelector<HTMLElement>(".coef-field")!;
      const weight = tag.querySelector<HTMLElement>(".num.weight")!;
      expect(name.textContent).toBe(payload.coefficients[rank].field);
      expect(Number(weight.dataset.value))
        .toBe(payload.coefficients[rank].weight);
      expect(name.style.fontSize)
        .toBe(`${tagFontPx(rank, DETAIL_TOP_K)}px`);
    });

    // affine in rank: constant decrement from the largest to the smallest
    const sizes = tags.map((tag) => parseFloat(
      tag.querySelector<HTMLElement>(".coef-field")!.style.fontSize));
    const step = sizes[0] - sizes[1];
    expect(step).toBeGreaterThan(0);
    for (let i = 1; i < sizes.length; i++) {
      expect(sizes[i - 1] - sizes[i]).toBeCloseTo(step, 9);
    }
  });
});

describe("pinning flow", () => {
  it("pin shows zero deltas, toggles show deltas, unpin hides them", async () => {
    const { store, ui } = mount();
    await store.init();
    setSelection(store, ["Game theory"]);
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    expect(ui.barsEl.querySelector(".num.citation-delta")).toBeNull();

    click(ui.pinButton);
    await flush();
    expect(ui.pinButton.textContent).toBe("unpin baseline");
    expect(ui.baselineEl.textContent).toBe("baseline: Game theory");
    const zeroDeltas = ui.barsEl.querySelectorAll<HTMLElement>(
      ".num.citation-delta");
    expect(zeroDeltas).toHaveLength(5);
    for (const delta of zeroDeltas) {
      expect(delta.dataset.value).toBe("0");
      expect(delta.textContent).toBe("+0.00");
    }

    store.toggleField("Deep learning");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    const deltas = [...ui.barsEl.querySelectorAll<HTMLElement>(
      ".num.citation-delta")].map((el) => Number(el.dataset.value));
    expect(Math.max(...deltas)).toBeGreaterThan(0);

    click(ui.pinButton);
    await flush();
    expect(ui.pinButton.textContent).toBe("pin baseline");
    expect(ui.barsEl.querySelector(".num.citation-delta")).toBeNull();
    expect(ui.baselineEl.textContent).toBe("");
  });
});
