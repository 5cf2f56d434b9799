/**
 * End-to-end checks against a real service process.
 *
 * Spawns `python -m fafrontier.cli serve`, drives the store the way the UI
 * does, and asserts that everything the explorer holds is byte-equal to the
 * service's own responses (the UI computes nothing itself).
 */

import { ChildProcess, spawn } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ExplorerStore, boundConfigFromKnobs } from "../src/state.js";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;
let server: ChildProcess;

async function waitForService(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      await fetch(`${BASE}/jobs/warmup-probe`);
      return; // any HTTP response (404 here) means the service is up
    } catch {
      await new Promise((resolve) => setTimeout(resolve, 100));
    }
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  server = spawn("python3", ["-m", "fafrontier.cli", "serve", "--port", String(PORT)], {
    cwd: new URL("../..", import.meta.url).pathname,
    stdio: "ignore",
  });
  await waitForService();
}, 60_000);

afterAll(() => {
  server?.kill();
});

function freshStore(options = {}): ExplorerStore {
  return new ExplorerStore(new ApiClient(BASE), {
    debounceMs: 0,
    gridPoints: 5,
    replicates: 400,
    seed: 12345,
    ...options,
  });
}

describe("allocation advisor", () => {
  it("shows 9:1 at weight 0.9 with equal radii, byte-equal to the API", async () => {
    const store = freshStore();
    store.state = {
      ...store.state,
      lambda: 0.9,
      budget: 100,
      hetero: 0.0,
      rhoR: 1.0,
      rhoB: 1.0,
      linked: true,
    };
    await store.refresh();
    expect(store.state.error).toBeNull();
    expect(store.state.allocation).toMatchObject({ n_r: 90, n_b: 10 });
    expect(store.state.nR).toBe(90);
    expect(store.state.nB).toBe(10);

    // byte-equality with a direct request carrying the same inputs
    const direct = await fetch(`${BASE}/allocate`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        budget: 100,
        config: boundConfigFromKnobs(store.state),
        rule: "bound",
      }),
    });
    expect(await direct.text()).toBe(store.state.raw.allocation);
  }, 120_000);

  it("labels a high-heterogeneity plan bias-dominated and near balance", async () => {
    const store = freshStore();
    store.state = {
      ...store.state,
      lambda: 0.9,
      budget: 100,
      hetero: 4.0,
      linked: true,
    };
    await store.refresh();
    const plan = store.state.allocation!;
    expect(plan.dominant).toBe("bias");
    expect(Math.abs(plan.n_r - plan.n_b)).toBeLessThanOrEqual(20);
  }, 120_000);

  it("surfaces the violated precondition verbatim", async () => {
    const store = freshStore();
    store.state = { ...store.state, budget: 3, linked: false };
    await store.refresh();
    expect(store.state.error).toContain("n_g >= 2");
  }, 120_000);
});

describe("frontier view", () => {
  it("collapses to a single point when heterogeneity is zero", async () => {
    const store = freshStore();
    store.state = { ...store.state, hetero: 0.0, linked: false };
    await store.refresh();
    const frontier = store.state.frontier!;
    expect(frontier.length).toBe(5);
    const uniqueR = new Set(frontier.map((p) => p.risk_r));
    const uniqueB = new Set(frontier.map((p) => p.risk_b));
    expect(uniqueR.size).toBe(1);
    expect(uniqueB.size).toBe(1);

    const direct = await fetch(`${BASE}/models/${store.state.modelId}/frontier?grid=5`);
    expect(await direct.text()).toBe(store.state.raw.frontier);

    // the band centers on the collapsed point
    const row = store.selectedBandRow()!;
    expect(row.q05_r).toBeLessThanOrEqual(row.q95_r);
    expect(row.pop_risk_r).toBe(frontier[0]!.risk_r);
  }, 120_000);

  it("weight endpoints highlight the group optima", async () => {
    const store = freshStore();
    store.state = { ...store.state, hetero: 1.0, linked: false };
    await store.refresh();
    store.state = { ...store.state, lambda: 1.0 };
    const point = store.selectedPoint()!;
    const frontier = store.state.frontier!;
    expect(point.lambda).toBe(1.0);
    expect(point.risk_r).toBe(Math.min(...frontier.map((p) => p.risk_r)));
  }, 120_000);
});

describe("empirical band", () => {
  it("tightens when the budget doubles, byte-equal to the API", async () => {
    const store = freshStore();
    store.state = { ...store.state, linked: false, nR: 50, nB: 50, hetero: 1.0 };
    await store.refresh();
    const mid = () => {
      const band = store.state.band!;
      return band.reduce((best, row) =>
        Math.abs(row.lambda - 0.5) < Math.abs(best.lambda - 0.5) ? row : best,
      );
    };
    const before = mid();
    const widthBefore = [before.q95_r - before.q05_r, before.q95_b - before.q05_b];

    store.state = { ...store.state, nR: 100, nB: 100, budget: 200 };
    await store.refresh();
    const after = mid();
    expect(after.q95_r - after.q05_r).toBeLessThan(widthBefore[0]!);
    expect(after.q95_b - after.q05_b).toBeLessThan(widthBefore[1]!);

    // byte-equality with a directly submitted job carrying identical inputs
    const submitted = await fetch(`${BASE}/mc`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        model_id: store.state.modelId,
        lambda: 0.5,
        n_r: 100,
        n_b: 100,
        estimator: "pooled_ols",
        replicates: 400,
        seed: 12345,
        grid: 5,
        mode: "band",
      }),
    });
    const jobId = (await submitted.json()).job_id as string;
    for (;;) {
      const record = await (await fetch(`${BASE}/jobs/${jobId}`)).json();
      if (record.status === "done") break;
      if (record.status === "failed") throw new Error(record.error);
      await new Promise((resolve) => setTimeout(resolve, 50));
    }
    const direct = await fetch(`${BASE}/jobs/${jobId}/result`);
    expect(await direct.text()).toBe(store.state.raw.band);
  }, 120_000);
});
