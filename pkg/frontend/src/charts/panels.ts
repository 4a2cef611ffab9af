/** Sample reconstruction panels: MRI grayscale canvas, ECG stacked lines,
 * and the 3×K prediction heatmap table. */

import { buildHeatmap } from "../heatmap.js";
import { ecgToLeads, mriToPixels } from "../samples.js";
import type { PredictionMatrixPayload, SamplePayload } from "../types.js";

export function drawMri(canvas: HTMLCanvasElement, payload: SamplePayload,
                        scale = 4): void {
  const { width, height, rgba } = mriToPixels(payload);
  canvas.width = width * scale;
  canvas.height = height * scale;
  const ctx = canvas.getContext("2d")!;
  const off = new OffscreenCanvas(width, height);
  const offCtx = off.getContext("2d")!;
  offCtx.putImageData(new ImageData(rgba, width, height), 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
}

export function drawEcg(canvas: HTMLCanvasElement, payload: SamplePayload): void {
  const leads = ecgToLeads(payload);
  const ctx = canvas.getContext("2d")!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const laneHeight = canvas.height / leads.length;
  ctx.strokeStyle = "#117733";
  ctx.lineWidth = 1;
  leads.forEach((lead, l) => {
    const mid = laneHeight * (l + 0.5);
    const gain = laneHeight / 4.5; // leads live in [-2, 2]
    ctx.beginPath();
    for (let i = 0; i < lead.length; i++) {
      const x = (i / (lead.length - 1)) * canvas.width;
      const y = mid - lead[i] * gain;
      if (i === 0) {
        ctx.moveTo(x, y);
      } else {
        ctx.lineTo(x, y);
      }
    }
    ctx.stroke();
  });
}

export function renderHeatmap(table: HTMLTableElement,
                              matrix: PredictionMatrixPayload): void {
  const model = buildHeatmap(matrix);
  table.textContent = "";
  const head = table.createTHead().insertRow();
  head.insertCell().textContent = "";
  for (const label of model.columnLabels) {
    const cell = head.insertCell();
    cell.textContent = label.replace(/_/g, " ");
  }
  const body = table.createTBody();
  model.rowLabels.forEach((rowLabel, i) => {
    const row = body.insertRow();
    row.insertCell().textContent = rowLabel.replace(/_/g, " & ");
    model.cells[i].forEach((cell) => {
      const td = row.insertCell();
      td.style.background = cell.color;
      td.textContent = cell.label;
      if (cell.metric !== null) {
        td.title = `test metric ${cell.metric.toFixed(3)}`;
      }
    });
  });
}
