/**
 * Browser entry point: wire the store, the view projection, and the DOM.
 *
 * The API base defaults to port 8355 on the page's host (the serve
 * command's default port); override with ?api=http://host:port.
 */

import { ApiClient } from "./api.js";
import { buildSkeleton, render, wire } from "./dom.js";
import { ExplorerStore } from "./state.js";
import { buildViewModel } from "./view.js";

const params = new URLSearchParams(window.location.search);
const apiBase = params.get("api")
  ?? `${window.location.protocol}//${window.location.hostname}:8355`;

const store = new ExplorerStore(new ApiClient(apiBase));
const root = document.getElementById("app");
if (root === null) throw new Error("missing #app mount point");

const ui = buildSkeleton(root);
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
void store.init();
