/** Canvas scatter plot of one modality's 2-D embedding with lasso drawing.
 * Pointer traces are simplified before they leave the browser. */

import { simplifyPolygon } from "../polygon.js";
import type { EmbeddingPayload } from "../types.js";

export interface ScatterHandle {
  setSelection(ids: number[] | null): void;
  setColors(colors: Map<number, string> | null): void;
  clearLassoPath(): void;
}

export interface ScatterOptions {
  onLasso: (polygon: [number, number][]) => void;
  pointRadius?: number;
}

export function renderScatter(
  canvas: HTMLCanvasElement,
  embedding: EmbeddingPayload,
  options: ScatterOptions,
): ScatterHandle {
  const ctx = canvas.getContext("2d")!;
  const pts = embedding.points;
  const xs = pts.map((p) => p[0]);
  const ys = pts.map((p) => p[1]);
  const pad = 12;
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const sx = (canvas.width - 2 * pad) / (xMax - xMin || 1);
  const sy = (canvas.height - 2 * pad) / (yMax - yMin || 1);

  const toPx = (p: [number, number]): [number, number] => [
    pad + (p[0] - xMin) * sx,
    canvas.height - pad - (p[1] - yMin) * sy,
  ];
  const toData = (px: number, py: number): [number, number] => [
    (px - pad) / sx + xMin,
    (canvas.height - pad - py) / sy + yMin,
  ];

  let selection: Set<number> | null = null;
  let colors: Map<number, string> | null = null;
  let trace: [number, number][] = [];
  let drawing = false;

  const radius = options.pointRadius ?? 2;

  function draw(): void {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    embedding.ids.forEach((id, i) => {
      const [x, y] = toPx(pts[i]);
      const inSelection = selection === null || selection.has(id);
      ctx.globalAlpha = inSelection ? 0.9 : 0.15;
      ctx.fillStyle = colors?.get(id) ?? "#4477aa";
      ctx.beginPath();
      ctx.arc(x, y, radius, 0, Math.PI * 2);
      ctx.fill();
    });
    ctx.globalAlpha = 1;
    if (trace.length > 1) {
      ctx.strokeStyle = "#cc3311";
      ctx.beginPath();
      ctx.moveTo(trace[0][0], trace[0][1]);
      for (const [x, y] of trace.slice(1)) {
        ctx.lineTo(x, y);
      }
      ctx.stroke();
    }
  }

  canvas.addEventListener("pointerdown", (e) => {
    drawing = true;
    trace = [[e.offsetX, e.offsetY]];
    canvas.setPointerCapture(e.pointerId);
  });
  canvas.addEventListener("pointermove", (e) => {
    if (!drawing) {
      return;
    }
    trace.push([e.offsetX, e.offsetY]);
    draw();
  });
  canvas.addEventListener("pointerup", () => {
    drawing = false;
    if (trace.length >= 3) {
      const simplified = simplifyPolygon(trace);
      options.onLasso(simplified.map(([px, py]) => toData(px, py)));
    }
    trace = [];
    draw();
  });

  draw();
  return {
    setSelection(ids: number[] | null): void {
      selection = ids === null ? null : new Set(ids);
      draw();
    },
    setColors(next: Map<number, string> | null): void {
      colors = next;
      draw();
    },
    clearLassoPath(): void {
      trace = [];
      draw();
    },
  };
}
