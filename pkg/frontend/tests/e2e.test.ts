// @vitest-environment node
// End-to-end smoke: a 50-vignette synthetic store served by the real API,
// gallery -> query -> three levels of click-through re-query, then
// breadcrumb back-navigation reproducing the prior result sets exactly.
import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import {
  applyResponse,
  beginRequest,
  goBack,
  initialState,
  setK,
  setQuery,
  UiQueryState,
} from "../src/state.js";
import type { QueryResultItem } from "../src/types.js";

const PORT = 8739;
const BASE = `http://127.0.0.1:${PORT}`;

let dataDir: string;
let server: ChildProcess | null = null;
const api = new ApiClient(BASE);

function cli(...args: string[]): void {
  execFileSync("sarlook", args, { stdio: "pipe" });
}

async function waitForHealth(timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const h = await api.health();
      if (h.status === "ok") return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 300));
  }
  throw new Error("server did not come up");
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "sarlook-e2e-"));
  // 10 classes x 5 vignettes = the 50-vignette store
  cli("synth", "--data-dir", dataDir, "--per-class", "5", "--seed", "11",
      "--rows", "320", "--cols", "320");
  cli("preprocess", "--data-dir", dataDir);
  cli("doppler", "--data-dir", dataDir);
  for (const rep of ["VIG", "SUBAP", "DOP_VIG", "DOP_SUBAP"]) {
    cli("embed", "--data-dir", dataDir, "--rep", rep, "--enc", "BASELINE");
    cli("index", "build", "--data-dir", dataDir, "--rep", rep, "--enc", "BASELINE");
  }
  server = spawn("sarlook", ["serve", "--data-dir", dataDir,
                             "--host", "127.0.0.1", "--port", String(PORT)],
                 { stdio: "ignore" });
  await waitForHealth();
}, 280000);

afterAll(() => {
  if (server) server.kill("SIGTERM");
  if (dataDir) rmSync(dataDir, { recursive: true, force: true });
});

async function issueQuery(state: UiQueryState):
    Promise<[UiQueryState, QueryResultItem[]]> {
  const [next, seq] = beginRequest(state);
  const resp = await api.queryById(next.queryId as string, next.k, next.rep, next.enc);
  const applied = applyResponse(next, seq, resp.results);
  return [applied, resp.results];
}

function signature(results: QueryResultItem[]): Array<[string, number, number]> {
  return results.map((r) => [r.id, r.rank, r.similarity]);
}

describe("end-to-end smoke against the live service", () => {
  it("serves the 50-vignette store", async () => {
    const page = await api.listVignettes({ limit: 100 });
    expect(page.total).toBe(50);
    const health = await api.health();
    expect(Object.keys(health.index_versions).sort()).toEqual(
      ["DOP_SUBAP_BASELINE", "DOP_VIG_BASELINE", "SUBAP_BASELINE", "VIG_BASELINE"]);
  });

  it("click-through three levels deep, then breadcrumb back-navigation "
     + "reproduces prior result sets exactly", async () => {
    const gallery = await api.listVignettes({ limit: 24 });
    expect(gallery.items.length).toBe(24);

    let state = setK(initialState(), 5);
    const seen: Array<{ id: string; sig: Array<[string, number, number]> }> = [];

    // level 0: query from the gallery
    state = setQuery(state, gallery.items[0].id);
    let results: QueryResultItem[];
    [state, results] = await issueQuery(state);
    expect(results.length).toBe(5);
    expect(results.every((r) => r.id !== state.queryId)).toBe(true);
    seen.push({ id: state.queryId as string, sig: signature(results) });

    // levels 1..3: click the top-ranked result each time
    for (let level = 1; level <= 3; level++) {
      const clicked = results[0].id;
      state = setQuery(state, clicked);
      expect(state.queryId).toBe(clicked);
      [state, results] = await issueQuery(state);
      expect(results.every((r) => r.id !== clicked)).toBe(true);
      const sims = results.map((r) => r.similarity);
      expect([...sims].sort((a, b) => b - a)).toEqual(sims);
      seen.push({ id: clicked, sig: signature(results) });
    }
    expect(state.breadcrumbs.length).toBe(3);

    // walk back through the breadcrumb trail; every re-query must reproduce
    // the exact result set recorded on the way in
    for (let level = 2; level >= 0; level--) {
      state = goBack(state, state.breadcrumbs.length - 1);
      expect(state.queryId).toBe(seen[level].id);
      [state, results] = await issueQuery(state);
      expect(signature(results)).toEqual(seen[level].sig);
    }
    expect(state.breadcrumbs).toEqual([]);
  }, 60000);

  it("thumbnails are served and byte-stable", async () => {
    const gallery = await api.listVignettes({ limit: 1 });
    const id = gallery.items[0].id;
    const url = api.thumbnailUrl(id, "SUBAP");
    const a = Buffer.from(await (await fetch(url)).arrayBuffer());
    const b = Buffer.from(await (await fetch(url)).arrayBuffer());
    expect(a.subarray(0, 8)).toEqual(Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]));
    expect(a.equals(b)).toBe(true);
  });

  it("stale responses from interleaved requests are discarded", async () => {
    // two real requests raced through the state machine: the older resolves
    // second but must not overwrite the newer one
    const gallery = await api.listVignettes({ limit: 24 });
    let state = setK(initialState(), 3);
    state = setQuery(state, gallery.items[1].id);
    const [s1, seqOld] = beginRequest(state);
    const oldPromise = api.queryById(gallery.items[1].id, 3, s1.rep, s1.enc);
    let s2 = setQuery(s1, gallery.items[2].id);
    const [s3, seqNew] = beginRequest(s2);
    const freshResp = await api.queryById(gallery.items[2].id, 3, s3.rep, s3.enc);
    let applied = applyResponse(s3, seqNew, freshResp.results);
    const oldResp = await oldPromise;
    applied = applyResponse(applied, seqOld, oldResp.results);
    expect(signature(applied.results as QueryResultItem[]))
      .toEqual(signature(freshResp.results));
  }, 60000);
});
