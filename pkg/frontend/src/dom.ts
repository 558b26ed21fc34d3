/**
 * DOM construction and rendering.
 *
 * `buildSkeleton` creates the static page structure once (so the search
 * input survives re-renders without losing focus) and `render` rewrites the
 * dynamic regions from a view model.  Every element showing a number
 * carries the exact payload value in `data-value`; the visible text is a
 * fixed-precision rendering of that same value.
 */

import { ViewModel, formatCitations, formatScore, formatSigned,
         formatWeight } from "./view.js";

export interface ExplorerHandlers {
  onQuery(query: string): void;
  onAddField(name: string): void;
  onToggleField(name: string): void;
  onPin(): void;
  onUnpin(): void;
  onSelectVenue(venue: string | null): void;
}

export interface ExplorerUi {
  root: HTMLElement;
  modelInfoEl: HTMLElement;
  bannerEl: HTMLElement;
  searchInput: HTMLInputElement;
  suggestionsEl: HTMLElement;
  tagsEl: HTMLElement;
  pinButton: HTMLButtonElement;
  baselineEl: HTMLElement;
  barsEl: HTMLElement;
  detailEl: HTMLElement;
  detailTitleEl: HTMLElement;
  offsetEl: HTMLElement;
  coefTagsEl: HTMLElement;
  current: ViewModel | null;
}

function el<K extends keyof HTMLElementTagNameMap>(
    doc: Document, tag: K, className?: string,
    text?: string): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function numberEl(doc: Document, className: string, value: number,
                  text: string): HTMLSpanElement {
  const node = el(doc, "span", `num ${className}`, text);
  node.dataset.value = String(value);
  return node;
}

export function buildSkeleton(root: HTMLElement): ExplorerUi {
  const doc = root.ownerDocument;

  const header = el(doc, "header");
  header.appendChild(el(doc, "h1", undefined, "venue what-if explorer"));
  const modelInfoEl = el(doc, "p", "model-info");
  header.appendChild(modelInfoEl);

  const bannerEl = el(doc, "div", "banner");
  bannerEl.setAttribute("role", "alert");
  bannerEl.hidden = true;

  const selection = el(doc, "section", "selection");
  const searchInput = el(doc, "input") as HTMLInputElement;
  searchInput.id = "field-search";
  searchInput.placeholder = "add a field of study";
  searchInput.autocomplete = "off";
  const suggestionsEl = el(doc, "ul", "suggestions");
  const tagsEl = el(doc, "ul", "selected-tags");
  const pinRow = el(doc, "div", "pin-row");
  const pinButton = el(doc, "button", "pin-button") as HTMLButtonElement;
  const baselineEl = el(doc, "span", "baseline-summary");
  pinRow.append(pinButton, baselineEl);
  selection.append(searchInput, suggestionsEl, tagsEl, pinRow);

  const barsSection = el(doc, "section", "venues");
  const barsEl = el(doc, "ul", "venue-bars");
  barsSection.appendChild(barsEl);

  const detailEl = el(doc, "section", "venue-detail");
  detailEl.hidden = true;
  const detailTitleEl = el(doc, "h2", "detail-title");
  const offsetEl = el(doc, "p", "venue-offset");
  offsetEl.hidden = true;
  const coefTagsEl = el(doc, "ul", "coef-tags");
  detailEl.append(detailTitleEl, offsetEl, coefTagsEl);

  root.replaceChildren(header, bannerEl, selection, barsSection, detailEl);
  return {
    root, modelInfoEl, bannerEl, searchInput, suggestionsEl, tagsEl,
    pinButton, baselineEl, barsEl, detailEl, detailTitleEl, offsetEl,
    coefTagsEl, current: null,
  };
}

export function wire(ui: ExplorerUi, handlers: ExplorerHandlers): void {
  ui.searchInput.addEventListener("input", () => {
    handlers.onQuery(ui.searchInput.value);
  });
  ui.searchInput.addEventListener("keydown", (event) => {
    if ((event as KeyboardEvent).key === "Enter") {
      event.preventDefault();
      handlers.onAddField(ui.searchInput.value);
    }
  });
  ui.pinButton.addEventListener("click", () => {
    if (ui.current?.pinnedFields) handlers.onUnpin();
    else handlers.onPin();
  });
  ui.suggestionsEl.addEventListener("click", (event) => {
    const button = (event.target as HTMLElement).closest("button[data-field]");
    if (button) handlers.onAddField((button as HTMLElement).dataset.field!);
  });
  ui.tagsEl.addEventListener("click", (event) => {
    const button = (event.target as HTMLElement).closest("button[data-field]");
    if (button) handlers.onToggleField((button as HTMLElement).dataset.field!);
  });
  ui.barsEl.addEventListener("click", (event) => {
    const row = (event.target as HTMLElement).closest("li[data-venue]");
    if (row) handlers.onSelectVenue((row as HTMLElement).dataset.venue!);
  });
}

function renderBars(ui: ExplorerUi, vm: ViewModel): void {
  const doc = ui.root.ownerDocument;
  const rows = vm.bars.map((bar) => {
    const row = el(doc, "li", bar.recommended ? "venue-bar recommended"
                                              : "venue-bar");
    row.dataset.venue = bar.venue;

    const head = el(doc, "div", "bar-head");
    head.appendChild(el(doc, "span", "venue-name", bar.venue));
    if (bar.recommended) {
      head.appendChild(el(doc, "span", "recommended-badge", "recommended"));
    }
    row.appendChild(head);

    const track = el(doc, "div", "bar-track");
    const fill = el(doc, "div", "bar-fill");
    fill.style.width = `${bar.widthPct}%`;
    track.appendChild(fill);
    row.appendChild(track);

    const metrics = el(doc, "div", "bar-metrics");
    metrics.appendChild(numberEl(doc, "citations", bar.citations,
                                 formatCitations(bar.citations)));
    metrics.appendChild(el(doc, "span", "unit", "citations"));
    metrics.appendChild(numberEl(doc, "score", bar.score,
                                 formatScore(bar.score)));
    metrics.appendChild(el(doc, "span", "unit", "log score"));
    if (bar.citationDelta !== null) {
      metrics.appendChild(numberEl(doc, "citation-delta", bar.citationDelta,
                                   formatSigned(bar.citationDelta, 2)));
      metrics.appendChild(el(doc, "span", "unit", "vs baseline"));
    }
    if (bar.scoreDelta !== null) {
      metrics.appendChild(numberEl(doc, "score-delta", bar.scoreDelta,
                                   formatSigned(bar.scoreDelta, 4)));
      metrics.appendChild(el(doc, "span", "unit", "log delta"));
    }
    row.appendChild(metrics);
    return row;
  });
  ui.barsEl.replaceChildren(...rows);
}

function renderDetail(ui: ExplorerUi, vm: ViewModel): void {
  const doc = ui.root.ownerDocument;
  if (vm.detail === null) {
    ui.detailEl.hidden = true;
    ui.coefTagsEl.replaceChildren();
    return;
  }
  ui.detailEl.hidden = false;
  ui.detailTitleEl.textContent =
    `${vm.detail.venue} coefficients (${vm.detail.learnerKind}-learner)`;
  if (vm.detail.venueOffset === null) {
    ui.offsetEl.hidden = true;
    ui.offsetEl.replaceChildren();
  } else {
    ui.offsetEl.hidden = false;
    ui.offsetEl.replaceChildren(
      el(doc, "span", "unit", "venue offset"),
      numberEl(doc, "venue-offset-value", vm.detail.venueOffset,
               formatScore(vm.detail.venueOffset)));
  }
  ui.coefTagsEl.replaceChildren(...vm.detail.tags.map((tag) => {
    const item = el(doc, "li", "coef-tag");
    const name = el(doc, "span", "coef-field", tag.field);
    name.style.fontSize = `${tag.fontPx}px`;
    item.appendChild(name);
    item.appendChild(numberEl(doc, "weight", tag.weight,
                              formatWeight(tag.weight)));
    return item;
  }));
}

export function render(ui: ExplorerUi, vm: ViewModel): void {
  const doc = ui.root.ownerDocument;
  ui.current = vm;
  ui.root.classList.toggle("loading", vm.loading);

  if (vm.modelInfo === null) {
    ui.modelInfoEl.replaceChildren();
  } else {
    const info = vm.modelInfo;
    ui.modelInfoEl.replaceChildren(
      el(doc, "span", "unit",
         `${info.learnerKind}-learner, ${info.weighting} weighting, ` +
         `${info.targetTransform} targets,`),
      numberEl(doc, "n-features", info.nFeatures, String(info.nFeatures)),
      el(doc, "span", "unit", "fields"));
  }

  ui.bannerEl.hidden = vm.banner === null;
  ui.bannerEl.textContent = vm.banner ?? "";

  if (ui.searchInput.value !== vm.query) ui.searchInput.value = vm.query;

  ui.suggestionsEl.replaceChildren(...vm.suggestions.map((field) => {
    const item = el(doc, "li", "suggestion");
    const button = el(doc, "button", "suggestion-button", field);
    button.dataset.field = field;
    item.appendChild(button);
    return item;
  }));

  ui.tagsEl.replaceChildren(...vm.selectedTags.map((tag) => {
    const item = el(doc, "li", tag.ignored ? "tag ignored" : "tag");
    item.dataset.field = tag.field;
    item.appendChild(el(doc, "span", "tag-name", tag.field));
    if (tag.ignored) {
      item.appendChild(el(doc, "span", "warning-chip", "unknown field"));
    }
    const remove = el(doc, "button", "tag-remove", "×");
    remove.dataset.field = tag.field;
    remove.setAttribute("aria-label", `remove ${tag.field}`);
    item.appendChild(remove);
    return item;
  }));

  ui.pinButton.textContent = vm.pinnedFields ? "unpin baseline"
                                             : "pin baseline";
  ui.pinButton.disabled = vm.bars.length === 0 && vm.pinnedFields === null;
  ui.baselineEl.textContent = vm.pinnedFields
    ? `baseline: ${vm.pinnedFields.join(", ") || "(empty selection)"}`
    : "";

  renderBars(ui, vm);
  renderDetail(ui, vm);
}
