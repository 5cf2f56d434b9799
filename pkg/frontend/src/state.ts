/**
 * Session state and the request loop.
 *
 * Knob changes are debounced; each facet (frontier, band, allocation) carries
 * a request sequence number and only the most recently issued request may
 * write its result back, so a slow stale response can never overwrite a
 * newer one. Identical request descriptors are skipped outright, which is
 * what makes weight-slider moves cache hits (the 0.01 granularity matches
 * the 101-point frontier grid and the band covers the whole grid at once).
 */

import {
  AllocationPlan,
  ApiClient,
  BandRow,
  BoundConfigDoc,
  FrontierPoint,
  ModelDoc,
  Raw,
} from "./api.js";

export interface Knobs {
  lambda: number;
  budget: number;
  nR: number;
  nB: number;
  linked: boolean; // keep n_r + n_b = budget, following the advisor
  hetero: number; // coefficient gap between the groups
  rhoR: number;
  rhoB: number;
  noiseVar: number;
}

export interface SessionState extends Knobs {
  modelId: string | null;
  frontier: FrontierPoint[] | null;
  band: BandRow[] | null;
  allocation: AllocationPlan | null;
  raw: { frontier?: string; band?: string; allocation?: string };
  error: string | null;
  pending: number;
}

export interface StoreOptions {
  debounceMs?: number;
  gridPoints?: number;
  replicates?: number;
  seed?: number;
}

export const DEFAULT_KNOBS: Knobs = {
  lambda: 0.5,
  budget: 100,
  nR: 50,
  nB: 50,
  linked: true,
  hetero: 1.0,
  rhoR: 1.0,
  rhoB: 1.0,
  noiseVar: 1.0,
};

/** Two-group spherical model implied by the scalar knobs (full matrices are JSON-upload only). */
export function modelFromKnobs(k: Knobs): ModelDoc {
  return {
    d: 2,
    noise_var: k.noiseVar,
    red: { beta: [k.hetero, 0.0], rho: k.rhoR },
    blue: { beta: [0.0, 0.0], rho: k.rhoB },
  };
}

/** Deterministic model id so re-registering the same knobs is a cache hit. */
export function modelIdFor(k: Knobs): string {
  const key = [k.hetero, k.rhoR, k.rhoB, k.noiseVar].join("_");
  return `knobs-${key}`.replace(/[^a-zA-Z0-9_.-]/g, "-");
}

export function boundConfigFromKnobs(k: Knobs): BoundConfigDoc {
  return {
    d: 2,
    n_r: k.nR,
    n_b: k.nB,
    lambda: k.lambda,
    rho_r: k.rhoR,
    rho_b: k.rhoB,
    noise_var: k.noiseVar,
    het: k.hetero,
  };
}

type Listener = (state: SessionState) => void;
type Facet = "frontier" | "band" | "allocation";

export class ExplorerStore {
  state: SessionState;
  private seq: Record<Facet, number> = { frontier: 0, band: 0, allocation: 0 };
  private issued: Record<Facet, string> = { frontier: "", band: "", allocation: "" };
  private listeners: Listener[] = [];
  private timer: ReturnType<typeof setTimeout> | null = null;
  private debounceMs: number;
  private gridPoints: number;
  private replicates: number;
  private seed: number;

  constructor(private api: ApiClient, options: StoreOptions = {}) {
    this.debounceMs = options.debounceMs ?? 150;
    this.gridPoints = options.gridPoints ?? 101;
    this.replicates = options.replicates ?? 400;
    this.seed = options.seed ?? 20240501;
    this.state = {
      ...DEFAULT_KNOBS,
      modelId: null,
      frontier: null,
      band: null,
      allocation: null,
      raw: {},
      error: null,
      pending: 0,
    };
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  /** Apply a knob change and schedule a debounced refresh. */
  setKnobs(patch: Partial<Knobs>): void {
    const next = { ...this.state, ...patch };
    if (patch.budget !== undefined && next.linked) {
      // proportionally rescale the split until the advisor answers
      const total = this.state.nR + this.state.nB || 1;
      next.nR = Math.max(1, Math.round((next.budget * this.state.nR) / total));
      next.nB = next.budget - next.nR;
    }
    if ((patch.nR !== undefined || patch.nB !== undefined) && next.linked) {
      next.nB = next.budget - next.nR;
    }
    this.state = next;
    this.emit();
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.refresh();
    }, this.debounceMs);
  }

  /** Issue whichever service requests the current knobs require. */
  async refresh(): Promise<void> {
    const knobs = this.state;
    const modelId = modelIdFor(knobs);
    try {
      if (this.state.modelId !== modelId) {
        this.state = { ...this.state, pending: this.state.pending + 1 };
        this.emit();
        await this.api.registerModel(modelFromKnobs(knobs), modelId);
        this.state = { ...this.state, modelId, pending: this.state.pending - 1 };
        this.emit();
      }
      await Promise.all([
        this.fetchFacet("frontier", `${modelId}|${this.gridPoints}`, () =>
          this.api.frontier(modelId, this.gridPoints),
        ),
        this.fetchFacet(
          "band",
          JSON.stringify([modelId, knobs.nR, knobs.nB, this.gridPoints, this.replicates, this.seed]),
          () =>
            this.api.band({
              model_id: modelId,
              lambda: 0.5, // band covers the whole grid; the weight knob only moves the highlight
              n_r: knobs.nR,
              n_b: knobs.nB,
              estimator: "pooled_ols",
              replicates: this.replicates,
              seed: this.seed,
              grid: this.gridPoints,
            }),
        ),
        this.fetchFacet(
          "allocation",
          JSON.stringify([knobs.budget, boundConfigFromKnobs(knobs)]),
          () => this.api.allocate(knobs.budget, boundConfigFromKnobs(knobs), "bound"),
        ),
      ]);
    } catch (err) {
      this.state = { ...this.state, error: String(err) };
      this.emit();
      return;
    }
    if (this.state.linked && this.state.allocation) {
      const plan = this.state.allocation;
      if (plan.n_r !== this.state.nR || plan.n_b !== this.state.nB) {
        this.state = { ...this.state, nR: plan.n_r, nB: plan.n_b };
        this.emit();
        await this.refresh(); // band must follow the adopted split
      }
    }
  }

  private async fetchFacet<T>(
    facet: Facet,
    descriptor: string,
    issue: () => Promise<Raw<T>>,
  ): Promise<void> {
    if (this.issued[facet] === descriptor && this.state[facet] !== null) {
      return; // identical request already answered: cache hit
    }
    this.issued[facet] = descriptor;
    const ticket = ++this.seq[facet];
    this.state = { ...this.state, pending: this.state.pending + 1 };
    this.emit();
    try {
      const result = await issue();
      if (this.seq[facet] === ticket) {
        this.state = {
          ...this.state,
          [facet]: result.value,
          raw: { ...this.state.raw, [facet]: result.text },
          error: null,
        } as SessionState;
      }
    } finally {
      this.state = { ...this.state, pending: this.state.pending - 1 };
      this.emit();
    }
  }

  /** The frontier point highlighted by the weight slider (nearest grid point). */
  selectedPoint(): FrontierPoint | null {
    const frontier = this.state.frontier;
    if (!frontier || frontier.length === 0) {
      return null;
    }
    let best = frontier[0]!;
    for (const point of frontier) {
      if (Math.abs(point.lambda - this.state.lambda) < Math.abs(best.lambda - this.state.lambda)) {
        best = point;
      }
    }
    return best;
  }

  /** The band row matching the highlighted weight. */
  selectedBandRow(): BandRow | null {
    const band = this.state.band;
    if (!band || band.length === 0) {
      return null;
    }
    let best = band[0]!;
    for (const row of band) {
      if (Math.abs(row.lambda - this.state.lambda) < Math.abs(best.lambda - this.state.lambda)) {
        best = row;
      }
    }
    return best;
  }
}
