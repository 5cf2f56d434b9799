/**
 * Typed client for the frontier service.
 *
 * Every helper returns the parsed body together with the raw response text:
 * the explorer never computes numbers of its own, and tests assert that the
 * values it holds are byte-equal to what the service sent.
 */

export interface FrontierPoint {
  lambda: number;
  risk_r: number;
  risk_b: number;
  beta: number[];
}

export interface BandRow {
  lambda: number;
  pop_risk_r: number;
  pop_risk_b: number;
  q05_r: number;
  q50_r: number;
  q95_r: number;
  q05_b: number;
  q50_b: number;
  q95_b: number;
}

export interface AllocationPlan {
  n_r: number;
  n_b: number;
  regime: string;
  objective_value: number;
  variance_term?: number;
  bias_term?: number;
  dominant?: "variance" | "bias";
}

export interface ModelDoc {
  d: number;
  noise_var: number;
  red: { beta: number[]; rho: number };
  blue: { beta: number[]; rho: number };
}

export interface BoundConfigDoc {
  d: number;
  n_r: number;
  n_b: number;
  lambda: number;
  rho_r: number;
  rho_b: number;
  noise_var: number;
  het: number;
}

export interface Raw<T> {
  text: string;
  value: T;
}

export class ServiceError extends Error {
  constructor(public status: number, public detail: string) {
    super(`${status}: ${detail}`);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function detailOf(response: Response): Promise<string> {
  try {
    const body = await response.json();
    return typeof body.detail === "string" ? body.detail : JSON.stringify(body);
  } catch {
    return response.statusText;
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
    private pollMs = 40,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      throw new ServiceError(response.status, await detailOf(response));
    }
    return response;
  }

  private async post(path: string, body: unknown): Promise<Response> {
    return this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  /** Register a model; an existing identical id is treated as already-registered. */
  async registerModel(model: ModelDoc, id: string): Promise<string> {
    try {
      const response = await this.post("/models", { model, id });
      const body = await response.json();
      return body.model_id as string;
    } catch (err) {
      if (err instanceof ServiceError && err.status === 409) {
        return id; // idempotent re-registration of the same knob settings
      }
      throw err;
    }
  }

  async frontier(modelId: string, grid: number): Promise<Raw<FrontierPoint[]>> {
    const response = await this.request(`/models/${modelId}/frontier?grid=${grid}`);
    const text = await response.text();
    return { text, value: JSON.parse(text).points as FrontierPoint[] };
  }

  async allocate(budget: number, config: BoundConfigDoc, rule: "known" | "bound"): Promise<Raw<AllocationPlan>> {
    const response = await this.post("/allocate", { budget, config, rule });
    const text = await response.text();
    return { text, value: JSON.parse(text) as AllocationPlan };
  }

  /** Submit a band job and poll until its result is available. */
  async band(body: Record<string, unknown>): Promise<Raw<BandRow[]>> {
    const submitted = await this.post("/mc", { ...body, mode: "band" });
    const jobId = (await submitted.json()).job_id as string;
    for (;;) {
      const record = await (await this.request(`/jobs/${jobId}`)).json();
      if (record.status === "failed") {
        throw new ServiceError(500, record.error ?? "band job failed");
      }
      if (record.status === "done") {
        break;
      }
      await new Promise((resolve) => setTimeout(resolve, this.pollMs));
    }
    const result = await this.request(`/jobs/${jobId}/result`);
    const text = await result.text();
    return { text, value: JSON.parse(text) as BandRow[] };
  }
}
