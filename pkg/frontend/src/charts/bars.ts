/** Covariate bar charts with click-to-filter; selected counts overlay. */

import type { Histograms } from "../types.js";

export interface BarClick {
  covariate: string;
  kind: "category" | "bin";
  category?: string;
  binIndex?: number;
}

export interface BarChartOptions {
  numericCovariates: Set<string>;
  activeCategories: Map<string, Set<string>>;
  activeBins: Map<string, Set<number>>;
  onClick: (click: BarClick) => void;
}

export function renderBarCharts(
  container: HTMLElement,
  histograms: Histograms,
  options: BarChartOptions,
): void {
  container.textContent = "";
  for (const [covariate, entry] of Object.entries(histograms)) {
    const block = document.createElement("div");
    block.className = "bar-block";
    const title = document.createElement("div");
    title.className = "bar-title";
    title.textContent = covariate.replace(/_/g, " ");
    block.appendChild(title);

    const maxCount = Math.max(1, ...entry.all);
    const row = document.createElement("div");
    row.className = "bar-row";
    const numeric = options.numericCovariates.has(covariate);

    entry.labels.forEach((label, i) => {
      const wrap = document.createElement("div");
      wrap.className = "bar-wrap";
      wrap.title = `${label}: ${entry.selected[i]} of ${entry.all[i]}`;

      const bar = document.createElement("div");
      bar.className = "bar";
      const active = numeric
        ? options.activeBins.get(covariate)?.has(i) ?? false
        : options.activeCategories.get(covariate)?.has(label) ?? false;
      if (active) {
        bar.classList.add("active");
      }
      const all = document.createElement("div");
      all.className = "bar-all";
      all.style.height = `${(100 * entry.all[i]) / maxCount}%`;
      const sel = document.createElement("div");
      sel.className = "bar-selected";
      sel.style.height = `${(100 * entry.selected[i]) / maxCount}%`;
      bar.appendChild(all);
      bar.appendChild(sel);
      bar.addEventListener("click", () => {
        options.onClick(
          numeric
            ? { covariate, kind: "bin", binIndex: i }
            : { covariate, kind: "category", category: label },
        );
      });

      const tick = document.createElement("div");
      tick.className = "bar-tick";
      tick.textContent = label;
      wrap.appendChild(bar);
      wrap.appendChild(tick);
      row.appendChild(wrap);
    });
    block.appendChild(row);
    container.appendChild(block);
  }
}
