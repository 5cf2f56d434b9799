/**
 * DOM rendering. Every number shown on screen is read from a service
 * response held in the store; this module only formats and draws.
 */

import { SessionState, ExplorerStore } from "./state.js";
import {
  ViewBox,
  bandAreaPath,
  displacementPaths,
  frameFor,
  frontierPath,
  tangentSegment,
} from "./geometry.js";

const BOX: ViewBox = { width: 640, height: 480, margin: 48 };

function fmt(value: number | undefined | null, digits = 4): string {
  if (value === undefined || value === null || Number.isNaN(value)) {
    return "–";
  }
  return value.toPrecision(digits);
}

export function renderChart(store: ExplorerStore, svg: SVGSVGElement, logAxes: boolean): void {
  const state = store.state;
  if (!state.frontier || state.frontier.length === 0) {
    svg.innerHTML = "";
    return;
  }
  const frame = frameFor(state.frontier, state.band, BOX, logAxes);
  const parts: string[] = [];
  if (state.band) {
    parts.push(`<path class="band" d="${bandAreaPath(state.band, frame)}"/>`);
  }
  parts.push(`<path class="frontier" d="${frontierPath(state.frontier, frame)}"/>`);
  const selected = store.selectedPoint();
  if (selected) {
    const tangent = tangentSegment(selected, frame);
    if (tangent) {
      parts.push(
        `<line class="tangent" x1="${tangent.x1.toFixed(2)}" y1="${tangent.y1.toFixed(2)}"` +
          ` x2="${tangent.x2.toFixed(2)}" y2="${tangent.y2.toFixed(2)}"/>`,
      );
    }
    parts.push(
      `<circle class="selected" cx="${frame.x(selected.risk_r).toFixed(2)}"` +
        ` cy="${frame.y(selected.risk_b).toFixed(2)}" r="5"/>`,
    );
  }
  const row = store.selectedBandRow();
  if (row) {
    const arrows = displacementPaths(row, frame);
    parts.push(`<path class="arrow" d="${arrows.horizontal}" marker-end="url(#tip)"/>`);
    parts.push(`<path class="arrow" d="${arrows.vertical}" marker-end="url(#tip)"/>`);
    parts.push(
      `<circle class="median" cx="${frame.x(row.q50_r).toFixed(2)}"` +
        ` cy="${frame.y(row.q50_b).toFixed(2)}" r="4"/>`,
    );
  }
  svg.innerHTML =
    `<defs><marker id="tip" markerWidth="8" markerHeight="8" refX="6" refY="3" orient="auto">` +
    `<path d="M0,0 L6,3 L0,6 Z"/></marker></defs>` +
    `<g>${parts.join("")}</g>` +
    `<text class="axis" x="${BOX.width / 2}" y="${BOX.height - 10}">red-group risk</text>` +
    `<text class="axis" transform="rotate(-90)" x="${-BOX.height / 2}" y="16">blue-group risk</text>`;
}

export function renderReadouts(store: ExplorerStore, root: Document): void {
  const state = store.state;
  const set = (id: string, text: string) => {
    const el = root.getElementById(id);
    if (el) {
      el.textContent = text;
    }
  };
  const point = store.selectedPoint();
  set("readout-lambda", state.lambda.toFixed(2));
  set("readout-risk-r", fmt(point?.risk_r));
  set("readout-risk-b", fmt(point?.risk_b));
  const row = store.selectedBandRow();
  set("readout-band-r", row ? `${fmt(row.q05_r)} … ${fmt(row.q95_r)}` : "–");
  set("readout-band-b", row ? `${fmt(row.q05_b)} … ${fmt(row.q95_b)}` : "–");
  set("readout-shift-r", row ? fmt(row.q50_r - row.pop_risk_r, 3) : "–");
  set("readout-shift-b", row ? fmt(row.q50_b - row.pop_risk_b, 3) : "–");
  set("readout-split", `${state.nR} / ${state.nB}`);

  const plan = state.allocation;
  set("advisor-split", plan ? `${plan.n_r} : ${plan.n_b}` : "–");
  set("advisor-regime", plan?.dominant ? `${plan.dominant}-dominated` : "–");
  set(
    "advisor-terms",
    plan && plan.variance_term !== undefined
      ? `variance ${fmt(plan.variance_term, 3)} vs bias ${fmt(plan.bias_term ?? NaN, 3)}`
      : "–",
  );
  set("status", state.pending > 0 ? "working…" : state.error ? state.error : "ready");
  const errorBox = root.getElementById("error");
  if (errorBox) {
    errorBox.textContent = state.error ?? "";
    errorBox.classList.toggle("visible", state.error !== null);
  }
}

export function bindControls(store: ExplorerStore, root: Document): void {
  const input = (id: string) => root.getElementById(id) as HTMLInputElement | null;
  const on = (id: string, handler: (el: HTMLInputElement) => void) => {
    const el = input(id);
    if (el) {
      el.addEventListener("input", () => handler(el));
    }
  };
  on("knob-lambda", (el) => store.setKnobs({ lambda: Number(el.value) }));
  on("knob-budget", (el) => store.setKnobs({ budget: Math.max(4, Number(el.value) | 0) }));
  on("knob-nr", (el) => store.setKnobs({ nR: Math.max(2, Number(el.value) | 0) }));
  on("knob-het", (el) => store.setKnobs({ hetero: Number(el.value) }));
  on("knob-rho-r", (el) => store.setKnobs({ rhoR: Number(el.value) }));
  on("knob-rho-b", (el) => store.setKnobs({ rhoB: Number(el.value) }));
  on("knob-linked", (el) => store.setKnobs({ linked: el.checked }));
}
