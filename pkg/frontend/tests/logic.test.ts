import { describe, expect, it } from "vitest";

import { DotPlotModel } from "../src/dotplot.js";
import { buildHeatmap, UNAVAILABLE_COLOR } from "../src/heatmap.js";
import { MAX_LASSO_VERTICES, simplifyPolygon } from "../src/polygon.js";
import { decodeSample, ecgToLeads, mriToPixels } from "../src/samples.js";
import { MockServer } from "./mock-server.js";

describe("simplifyPolygon", () => {
  it("leaves short traces untouched", () => {
    const trace: [number, number][] = [
      [0, 0],
      [1, 0],
      [1, 1],
    ];
    expect(simplifyPolygon(trace)).toEqual(trace);
  });

  it("caps pointer traces at the vertex budget, keeping the endpoints", () => {
    const trace: [number, number][] = Array.from({ length: 500 }, (_, i) => [
      Math.cos(i / 80),
      Math.sin(i / 80),
    ]);
    const out = simplifyPolygon(trace);
    expect(out.length).toBeLessThanOrEqual(MAX_LASSO_VERTICES);
    expect(out[0]).toEqual(trace[0]);
    expect(out[out.length - 1]).toEqual(trace[trace.length - 1]);
    // every output vertex is a vertex of the original trace
    const asSet = new Set(trace.map((p) => p.join(",")));
    for (const p of out) {
      expect(asSet.has(p.join(","))).toBe(true);
    }
  });
});

describe("DotPlotModel", () => {
  it("clamps beyond-range drags and suppresses the request", () => {
    const model = new DotPlotModel([0, 0, 0], [1, 2, 3]);
    const result = model.drag(1, 5);
    expect(result).toEqual({ value: 2, fire: false });
    const back = model.drag(1, 1.5);
    expect(back).toEqual({ value: 1.5, fire: true });
  });

  it("keeps at most one row dirty between round trips", () => {
    const model = new DotPlotModel([0, 0, 0], [1, 1, 1]);
    model.drag(0, 0.5);
    expect(model.dirtyCount()).toBe(1);
    model.drag(2, -0.25);
    expect(model.dirtyCount()).toBe(1);
    expect(model.rows[0].value).toBe(0); // reverted to baseline
    model.commit(2);
    expect(model.dirtyCount()).toBe(0);
    expect(model.vector()).toEqual([0, 0, -0.25]);
  });

  it("returning to the baseline value clears the dirty flag", () => {
    const model = new DotPlotModel([0.5], [2]);
    model.drag(0, 1.0);
    expect(model.dirtyCount()).toBe(1);
    const result = model.drag(0, 0.5);
    expect(result.fire).toBe(true);
    expect(model.dirtyCount()).toBe(0);
  });
});

describe("buildHeatmap", () => {
  it("renders 3 rows × K columns with binary cells on a unit color scale", () => {
    const server = new MockServer();
    const matrix = {
      rows: ["ecg_only", "mri_only", "ecg_and_mri"],
      phenotypes: [
        { name: "hypertension", kind: "binary" as const },
        { name: "heart_scale", kind: "continuous" as const },
      ],
      cells: [
        [0.0, 1.2],
        [0.5, -0.6],
        [1.0, null],
      ],
      metrics: [
        [0.8, 0.9],
        [0.7, 0.9],
        [0.85, null],
      ],
    };
    const model = buildHeatmap(matrix);
    expect(model.rowLabels).toHaveLength(3);
    expect(model.columnLabels).toEqual(["hypertension", "heart_scale"]);
    // p=0 → white, p=1 → saturated; intermediate in between
    expect(model.cells[0][0].color).toBe("rgb(255, 255, 255)");
    expect(model.cells[2][0].color).toBe("rgb(255, 38, 0)");
    expect(model.cells[2][1].color).toBe(UNAVAILABLE_COLOR);
    expect(model.cells[2][1].label).toBe("n/a");
    void server;
  });
});

describe("sample decoding", () => {
  it("round-trips float32 bytes with shape checking", () => {
    const server = new MockServer();
    const payload = server.renderSample([0.1, 0.2, 0.3, 0.4], "mri");
    const { data, shape } = decodeSample(payload);
    expect(shape).toEqual([32, 32]);
    expect(data).toHaveLength(1024);
    const pixels = mriToPixels(payload);
    expect(pixels.width).toBe(32);
    expect(pixels.rgba).toHaveLength(32 * 32 * 4);
  });

  it("splits ecg payloads into leads", () => {
    const server = new MockServer();
    const payload = server.renderSample([0.1, 0.2, 0.3, 0.4], "ecg");
    const leads = ecgToLeads(payload);
    expect(leads).toHaveLength(4);
    expect(leads[0]).toHaveLength(256);
  });

  it("rejects byte/shape mismatches", () => {
    const server = new MockServer();
    const payload = server.renderSample([0, 0, 0, 0], "mri");
    expect(() => decodeSample({ ...payload, shape: [16, 16] })).toThrow();
  });
});
