import { describe, expect, it } from "vitest";

import { ExplorerApi } from "../src/api.js";
import { SelectionStore } from "../src/state.js";
import { MockServer } from "./mock-server.js";

async function setup() {
  const server = new MockServer();
  const api = new ExplorerApi("", server.fetch);
  const summary = await api.summary();
  const store = new SelectionStore(api, summary.covariate_schema);
  return { server, api, store };
}

describe("SelectionStore", () => {
  it("starts with everyone selected", async () => {
    const { store } = await setup();
    const snap = await store.refresh();
    expect(snap.ids).toBeNull();
    expect(snap.histograms).not.toBeNull();
  });

  it("bar toggles are server-authoritative", async () => {
    const { api, store } = await setup();
    const snap = await store.toggleCategory("sex", "female");
    const requeried = await api.filter([{ covariate: "sex", categories: ["female"] }]);
    expect(snap.ids).toEqual(requeried);
  });

  it("toggling the same bar twice clears the clause", async () => {
    const { store } = await setup();
    await store.toggleCategory("sex", "female");
    const snap = await store.toggleCategory("sex", "female");
    expect(snap.clauses).toEqual([]);
    expect(snap.ids).toBeNull();
  });

  it("multiple bars in one series union their categories", async () => {
    const { store } = await setup();
    await store.toggleCategory("sex", "female");
    const snap = await store.toggleCategory("sex", "male");
    expect(snap.clauses).toEqual([
      { covariate: "sex", categories: ["female", "male"] },
    ]);
  });

  it("numeric bins become the hull interval", async () => {
    const { store } = await setup();
    await store.toggleBin("age", 0);
    const snap = await store.toggleBin("age", 2);
    expect(snap.clauses).toEqual([{ covariate: "age", interval: [40, 70] }]);
  });

  it("lasso and filter compose by intersection of server answers", async () => {
    const { api, store } = await setup();
    await store.toggleCategory("sex", "female");
    const polygon: [number, number][] = [
      [-5, -5],
      [5, -5],
      [5, 5],
      [-5, 5],
    ];
    const snap = await store.setLasso("mri", polygon);
    const filterIds = await api.filter([{ covariate: "sex", categories: ["female"] }]);
    const lassoIds = await api.lasso("mri", polygon);
    const lassoSet = new Set(lassoIds);
    expect(snap.ids).toEqual(filterIds.filter((id) => lassoSet.has(id)));
  });

  it("histograms always reflect the committed selection", async () => {
    const { api, store } = await setup();
    const snap = await store.toggleCategory("hypertension", "true");
    const requeried = await api.histogram(snap.ids!);
    expect(snap.histograms).toEqual(requeried);
  });

  it("drops stale responses by sequence id", async () => {
    const server = new MockServer();
    let delayNext = false;
    let release: (() => void) | null = null;
    const gate = new Promise<void>((resolve) => {
      release = resolve;
    });
    const slowFetch: typeof server.fetch = async (url, init) => {
      const shouldDelay = delayNext && String(url).includes("/api/cohort/filter");
      if (shouldDelay) {
        delayNext = false;
        await gate;
      }
      return server.fetch(url, init);
    };
    const api = new ExplorerApi("", slowFetch);
    const summary = await api.summary();
    const store = new SelectionStore(api, summary.covariate_schema);

    delayNext = true;
    const first = store.toggleCategory("sex", "female"); // stalls on the gate
    const second = await store.toggleCategory("hypertension", "true");
    release!();
    const firstResult = await first;

    // the slow first query must not overwrite the newer committed state
    expect(store.snapshot.seq).toBe(second.seq);
    expect(firstResult.seq).toBe(second.seq);
    const requeried = await api.filter(store.snapshot.clauses);
    expect(store.snapshot.ids).toEqual(requeried);
    expect(store.log.some((e) => e.action === "dropped-stale")).toBe(true);
  });

  it("clearAll returns to the all-subjects state", async () => {
    const { store } = await setup();
    await store.toggleCategory("sex", "male");
    await store.setLasso("ecg", [
      [-5, -5],
      [5, -5],
      [0, 5],
    ]);
    const snap = await store.clearAll();
    expect(snap.ids).toBeNull();
    expect(snap.clauses).toEqual([]);
    expect(Object.keys(snap.lassos)).toHaveLength(0);
  });
});
