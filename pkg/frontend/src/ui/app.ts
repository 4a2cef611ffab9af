/** Application wiring: coordinated views over the explorer service. */

import { ApiError, ExplorerApi } from "../api.js";
import { renderBarCharts } from "../charts/bars.js";
import { drawEcg, drawMri, renderHeatmap } from "../charts/panels.js";
import { renderScatter, ScatterHandle } from "../charts/scatter.js";
import { DotPlotModel } from "../dotplot.js";
import { SelectionStore } from "../state.js";
import { rateLimit } from "../throttle.js";
import type {
  EmbeddingPayload,
  Modality,
  ReconstructResponse,
  VectorPayload,
} from "../types.js";

const MAX_PANELS = 4; // simultaneous reconstruction panels
const DRAG_MIN_INTERVAL_MS = 100; // ≤ 10 perturb requests per second

interface GroupEntry {
  id: string;
  name: string;
  size: number;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function toast(message: string): void {
  const box = document.getElementById("toasts")!;
  const item = el("div", "toast", message);
  box.appendChild(item);
  setTimeout(() => item.remove(), 5000);
}

function reportError(err: unknown): void {
  if (err instanceof ApiError) {
    toast(`${err.code}: ${err.message}`);
  } else {
    toast(String(err));
  }
}

export async function bootstrap(api: ExplorerApi, root: HTMLElement): Promise<void> {
  const summary = await api.summary();
  const embeddings: Partial<Record<Modality, EmbeddingPayload>> = {};
  for (const modality of summary.modalities) {
    embeddings[modality] = await api.embedding(modality);
  }

  root.textContent = "";
  const layout = el("div", "layout");
  const barsPane = el("div", "pane bars-pane");
  const scatterPane = el("div", "pane scatter-pane");
  const groupsPane = el("div", "pane groups-pane");
  const panelsPane = el("div", "pane panels-pane");
  layout.append(barsPane, scatterPane, groupsPane, panelsPane);
  root.appendChild(layout);
  root.appendChild(el("div", "toasts"));
  root.lastElementChild!.id = "toasts";

  const store = new SelectionStore(api, summary.covariate_schema);
  const numericCovariates = new Set(
    summary.covariate_schema.filter((c) => c.kind === "numeric").map((c) => c.name),
  );

  const scatterHandles = new Map<Modality, ScatterHandle>();
  const activeCategories = new Map<string, Set<string>>();
  const activeBins = new Map<string, Set<number>>();
  const groups: GroupEntry[] = [];

  function redrawBars(): void {
    const snap = store.snapshot;
    if (!snap.histograms) {
      return;
    }
    renderBarCharts(barsPane, snap.histograms, {
      numericCovariates,
      activeCategories,
      activeBins,
      onClick: (click) => {
        const toggled =
          click.kind === "category"
            ? toggleLocal(activeCategories, click.covariate, click.category!)
            : toggleLocal(activeBins, click.covariate, click.binIndex!);
        void toggled;
        const action =
          click.kind === "category"
            ? store.toggleCategory(click.covariate, click.category!)
            : store.toggleBin(click.covariate, click.binIndex!);
        action.catch(reportError);
      },
    });
  }

  function toggleLocal<T>(map: Map<string, Set<T>>, key: string, value: T): boolean {
    const set = map.get(key) ?? new Set<T>();
    if (set.has(value)) {
      set.delete(value);
    } else {
      set.add(value);
    }
    if (set.size === 0) {
      map.delete(key);
    } else {
      map.set(key, set);
    }
    return set.has(value);
  }

  store.subscribe((snap) => {
    redrawBars();
    for (const handle of scatterHandles.values()) {
      handle.setSelection(snap.ids);
    }
    const label = document.getElementById("selection-label");
    if (label) {
      label.textContent =
        snap.ids === null ? `all ${summary.n} subjects` : `${snap.ids.length} selected`;
    }
  });

  // scatter plots, one per modality
  for (const modality of summary.modalities) {
    const wrap = el("div", "scatter-wrap");
    wrap.appendChild(el("div", "scatter-title", `${modality} latent map`));
    const canvas = el("canvas", "scatter");
    canvas.width = 340;
    canvas.height = 300;
    wrap.appendChild(canvas);
    scatterPane.appendChild(wrap);
    const handle = renderScatter(canvas, embeddings[modality]!, {
      onLasso: (polygon) => {
        store.setLasso(modality, polygon).catch(reportError);
      },
    });
    scatterHandles.set(modality, handle);
  }

  const controls = el("div", "controls");
  const selectionLabel = el("span", "selection-label");
  selectionLabel.id = "selection-label";
  selectionLabel.textContent = `all ${summary.n} subjects`;
  const clearBtn = el("button", "", "clear selection");
  clearBtn.addEventListener("click", () => {
    activeCategories.clear();
    activeBins.clear();
    store.clearAll().catch(reportError);
    for (const handle of scatterHandles.values()) {
      handle.clearLassoPath();
    }
  });
  const groupBtn = el("button", "", "create group from selection");
  const groupList = el("div", "group-list");
  groupBtn.addEventListener("click", async () => {
    const snap = store.snapshot;
    if (snap.ids === null || snap.ids.length === 0) {
      toast("select some subjects first");
      return;
    }
    const name = `group ${groups.length + 1}`;
    try {
      const created = await api.createGroup(name, { ids: snap.ids });
      groups.push({ id: created.group_id, name, size: created.size });
      redrawGroups();
    } catch (err) {
      reportError(err);
    }
  });
  controls.append(selectionLabel, clearBtn, groupBtn);
  groupsPane.append(controls, groupList);

  function redrawGroups(): void {
    groupList.textContent = "";
    for (const group of groups) {
      const row = el("div", "group-row");
      row.appendChild(el("span", "group-name", `${group.name} (${group.size})`));
      const reconstructBtn = el("button", "", "reconstruct");
      reconstructBtn.addEventListener("click", () => {
        reconstructPanel(group).catch(reportError);
      });
      const perturbBtn = el("button", "", "perturb");
      perturbBtn.addEventListener("click", () => {
        openPerturbDialog(group).catch(reportError);
      });
      row.append(reconstructBtn, perturbBtn);
      groupList.appendChild(row);
    }
    if (groups.length >= 2) {
      const row = el("div", "group-row");
      const interpBtn = el("button", "", "interpolate last two groups");
      interpBtn.addEventListener("click", () => {
        openInterpolateDialog(groups[groups.length - 2], groups[groups.length - 1])
          .catch(reportError);
      });
      row.appendChild(interpBtn);
      groupList.appendChild(row);
    }
  }

  function samplePanel(title: string, response: ReconstructResponse): HTMLElement {
    const panel = el("div", "sample-panel");
    panel.appendChild(el("div", "panel-title", title));
    const body = el("div", "panel-body");
    if (response.samples.mri) {
      const canvas = el("canvas", "mri-canvas");
      drawMri(canvas, response.samples.mri);
      body.appendChild(canvas);
    }
    if (response.samples.ecg) {
      const canvas = el("canvas", "ecg-canvas");
      canvas.width = 320;
      canvas.height = 160;
      drawEcg(canvas, response.samples.ecg);
      body.appendChild(canvas);
    }
    panel.appendChild(body);
    const table = el("table", "heatmap");
    renderHeatmap(table, response.matrix);
    panel.appendChild(table);
    return panel;
  }

  async function reconstructPanel(group: GroupEntry): Promise<void> {
    const response = await api.reconstruct(group.id, "mean", ["ecg", "mri"]);
    const panel = samplePanel(`${group.name} (mean)`, response);
    while (panelsPane.children.length >= MAX_PANELS) {
      panelsPane.firstElementChild!.remove();
    }
    panelsPane.appendChild(panel);
  }

  async function openPerturbDialog(group: GroupEntry): Promise<void> {
    const base = await api.reconstruct(group.id, "mean", ["ecg", "mri"]);
    const origin = base.vector.origin;
    const ranges = summary.display_range[origin] ?? summary.display_range.fused;
    const model = new DotPlotModel(base.vector.values, ranges);

    const dialog = el("div", "dialog perturb-dialog");
    dialog.appendChild(el("div", "panel-title", `perturb ${group.name}`));
    const dots = el("div", "dotplot");
    const sideBySide = el("div", "side-by-side");
    const originalPanel = samplePanel("original", base);
    const perturbedPanel = el("div", "sample-panel");
    sideBySide.append(originalPanel, perturbedPanel);

    const issue = async (vector: VectorPayload, k: number, value: number) => {
      try {
        const response = await api.perturb(vector, k, value, ["ecg", "mri"]);
        model.commit(k);
        perturbedPanel.textContent = "";
        perturbedPanel.appendChild(el("div", "panel-title", `dimension ${k} → ${value.toFixed(3)}`));
        if (response.perturbed.mri) {
          const canvas = el("canvas", "mri-canvas");
          drawMri(canvas, response.perturbed.mri);
          perturbedPanel.appendChild(canvas);
        }
        if (response.perturbed.ecg) {
          const canvas = el("canvas", "ecg-canvas");
          canvas.width = 320;
          canvas.height = 160;
          drawEcg(canvas, response.perturbed.ecg);
          perturbedPanel.appendChild(canvas);
        }
        const table = el("table", "heatmap");
        renderHeatmap(table, response.matrix);
        perturbedPanel.appendChild(table);
      } catch (err) {
        reportError(err);
      }
    };
    const throttledIssue = rateLimit(
      (k: number, value: number) => {
        void issue({ values: model.vector(), origin }, k, value);
      },
      DRAG_MIN_INTERVAL_MS,
    );

    model.rows.forEach((row, k) => {
      const lane = el("div", "dot-lane");
      lane.appendChild(el("span", "dot-label", `z[${k}]`));
      const slider = el("input") as HTMLInputElement;
      slider.type = "range";
      slider.min = String(-row.range);
      slider.max = String(row.range);
      slider.step = "any";
      slider.value = String(row.value);
      slider.addEventListener("input", () => {
        const result = model.drag(k, Number(slider.value));
        slider.value = String(result.value);
        if (result.fire) {
          throttledIssue(k, result.value);
        }
      });
      slider.addEventListener("change", () => {
        const result = model.drag(k, Number(slider.value));
        if (result.fire) {
          void issue({ values: model.vector(), origin }, k, result.value);
        }
      });
      lane.appendChild(slider);
      dots.appendChild(lane);
    });

    const close = el("button", "", "close");
    close.addEventListener("click", () => dialog.remove());
    dialog.append(dots, sideBySide, close);
    document.body.appendChild(dialog);
  }

  async function openInterpolateDialog(a: GroupEntry, b: GroupEntry): Promise<void> {
    const [left, right] = await Promise.all([
      api.reconstruct(a.id, "mean", ["ecg", "mri"]),
      api.reconstruct(b.id, "mean", ["ecg", "mri"]),
    ]);
    const dialog = el("div", "dialog interpolate-dialog");
    dialog.appendChild(el("div", "panel-title", `interpolate ${a.name} → ${b.name}`));
    const strip = el("div", "side-by-side");
    const middle = el("div", "sample-panel");
    strip.append(samplePanel(a.name, left), middle, samplePanel(b.name, right));

    const slider = el("input") as HTMLInputElement;
    slider.type = "range";
    slider.min = "0";
    slider.max = "1";
    slider.step = "0.01";
    slider.value = "0.5";
    const update = rateLimit(
      (t: number) => {
        api
          .interpolate(a.id, b.id, t, ["ecg", "mri"])
          .then((response) => {
            middle.textContent = "";
            middle.appendChild(el("div", "panel-title", `t = ${t.toFixed(2)}`));
            if (response.samples.mri) {
              const canvas = el("canvas", "mri-canvas");
              drawMri(canvas, response.samples.mri);
              middle.appendChild(canvas);
            }
            if (response.samples.ecg) {
              const canvas = el("canvas", "ecg-canvas");
              canvas.width = 320;
              canvas.height = 160;
              drawEcg(canvas, response.samples.ecg);
              middle.appendChild(canvas);
            }
            const table = el("table", "heatmap");
            renderHeatmap(table, response.matrix);
            middle.appendChild(table);
          })
          .catch(reportError);
      },
      DRAG_MIN_INTERVAL_MS,
    );
    slider.addEventListener("input", () => update(Number(slider.value)));
    update(0.5);

    const close = el("button", "", "close");
    close.addEventListener("click", () => dialog.remove());
    dialog.append(strip, slider, close);
    document.body.appendChild(dialog);
  }

  await store.refresh();
  redrawBars();
}
