/** Prediction heatmap model: three fixed condition rows by K phenotypes.
 * Binary cells color on a [0, 1] probability scale; continuous cells get a
 * diverging ramp around zero of their column's observed magnitude. */

import type { PredictionMatrixPayload } from "./types.js";

export interface HeatmapCell {
  value: number | null;
  metric: number | null;
  color: string; // css color; gray for unavailable
  label: string;
}

export interface HeatmapModel {
  rowLabels: string[];
  columnLabels: string[];
  cells: HeatmapCell[][]; // [row][column]
}

function probabilityColor(p: number): string {
  // white → deep red over [0, 1]
  const clamped = Math.max(0, Math.min(1, p));
  const g = Math.round(255 * (1 - clamped * 0.85));
  const b = Math.round(255 * (1 - clamped));
  return `rgb(255, ${g}, ${b})`;
}

function continuousColor(value: number, scale: number): string {
  // blue (negative) → white → orange (positive), normalized per column
  const t = Math.max(-1, Math.min(1, scale > 0 ? value / scale : 0));
  if (t >= 0) {
    const o = Math.round(255 * (1 - t * 0.6));
    return `rgb(255, ${o}, ${Math.round(255 * (1 - t))})`;
  }
  const o = Math.round(255 * (1 + t * 0.6));
  return `rgb(${Math.round(255 * (1 + t))}, ${o}, 255)`;
}

export const UNAVAILABLE_COLOR = "rgb(224, 224, 224)";

export function buildHeatmap(matrix: PredictionMatrixPayload): HeatmapModel {
  const k = matrix.phenotypes.length;
  const columnScale: number[] = new Array(k).fill(0);
  for (let j = 0; j < k; j++) {
    for (let i = 0; i < matrix.rows.length; i++) {
      const v = matrix.cells[i][j];
      if (v !== null) {
        columnScale[j] = Math.max(columnScale[j], Math.abs(v));
      }
    }
  }
  const cells: HeatmapCell[][] = matrix.rows.map((_, i) =>
    matrix.phenotypes.map((spec, j) => {
      const value = matrix.cells[i][j];
      const metric = matrix.metrics[i][j];
      if (value === null) {
        return { value, metric, color: UNAVAILABLE_COLOR, label: "n/a" };
      }
      const color =
        spec.kind === "binary"
          ? probabilityColor(value)
          : continuousColor(value, columnScale[j]);
      return { value, metric, color, label: value.toFixed(3) };
    }),
  );
  return {
    rowLabels: matrix.rows.slice(),
    columnLabels: matrix.phenotypes.map((p) => p.name),
    cells,
  };
}
