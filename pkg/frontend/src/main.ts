/** Entry point: wire the knobs to the store and the store to the views. */

import { ApiClient } from "./api.js";
import { ExplorerStore } from "./state.js";
import { bindControls, renderChart, renderReadouts } from "./views.js";

const api = new ApiClient(window.location.origin);
const store = new ExplorerStore(api);

const svg = document.getElementById("chart") as unknown as SVGSVGElement;
const logToggle = document.getElementById("knob-log") as HTMLInputElement;

function render(): void {
  renderChart(store, svg, logToggle?.checked ?? false);
  renderReadouts(store, document);
}

store.subscribe(render);
bindControls(store, document);
logToggle?.addEventListener("input", render);
render();
void store.refresh();
