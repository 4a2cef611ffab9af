/** Selection state for the linked views.
 *
 * The store never computes cohort membership itself: bar clicks and lasso
 * polygons are sent to the service, and the displayed selection is the
 * intersection of the id lists the server returned. Responses carry
 * monotonically increasing sequence ids; anything stale is dropped.
 */

import type { ExplorerApi } from "./api.js";
import type {
  CovariateSchemaEntry,
  FilterClause,
  Histograms,
  Modality,
} from "./types.js";

export interface GroupInfo {
  id: string;
  name: string;
  size: number;
}

export interface SelectionSnapshot {
  /** null means "everyone" (no active filters or lassos) */
  ids: number[] | null;
  clauses: FilterClause[];
  lassos: Partial<Record<Modality, [number, number][]>>;
  histograms: Histograms | null;
  seq: number;
}

interface LogEntry {
  action: string;
  detail: unknown;
}

function intersect(a: number[], b: number[]): number[] {
  const set = new Set(b);
  return a.filter((v) => set.has(v));
}

export class SelectionStore {
  private readonly schema = new Map<string, CovariateSchemaEntry>();
  /** category labels picked per categorical/boolean covariate */
  private readonly picked = new Map<string, Set<string>>();
  /** bin indices picked per numeric covariate */
  private readonly pickedBins = new Map<string, Set<number>>();
  private lassos: Partial<Record<Modality, [number, number][]>> = {};

  private seq = 0;
  private committed: SelectionSnapshot = {
    ids: null,
    clauses: [],
    lassos: {},
    histograms: null,
    seq: 0,
  };
  private listeners: ((snap: SelectionSnapshot) => void)[] = [];
  readonly log: LogEntry[] = [];

  constructor(
    private readonly api: ExplorerApi,
    schema: CovariateSchemaEntry[],
  ) {
    for (const entry of schema) {
      this.schema.set(entry.name, entry);
    }
  }

  subscribe(listener: (snap: SelectionSnapshot) => void): void {
    this.listeners.push(listener);
  }

  get snapshot(): SelectionSnapshot {
    return this.committed;
  }

  /** Toggle one bar of a categorical/boolean series. */
  toggleCategory(covariate: string, category: string): Promise<SelectionSnapshot> {
    const entry = this.schema.get(covariate);
    if (!entry || entry.kind === "numeric") {
      throw new Error(`not a categorical covariate: ${covariate}`);
    }
    const set = this.picked.get(covariate) ?? new Set<string>();
    if (set.has(category)) {
      set.delete(category);
    } else {
      set.add(category);
    }
    if (set.size === 0) {
      this.picked.delete(covariate);
    } else {
      this.picked.set(covariate, set);
    }
    this.log.push({ action: "toggle-category", detail: { covariate, category } });
    return this.refresh();
  }

  /** Toggle one bin of a numeric series; the clause is the hull interval. */
  toggleBin(covariate: string, binIndex: number): Promise<SelectionSnapshot> {
    const entry = this.schema.get(covariate);
    if (!entry || entry.kind !== "numeric") {
      throw new Error(`not a numeric covariate: ${covariate}`);
    }
    const set = this.pickedBins.get(covariate) ?? new Set<number>();
    if (set.has(binIndex)) {
      set.delete(binIndex);
    } else {
      set.add(binIndex);
    }
    if (set.size === 0) {
      this.pickedBins.delete(covariate);
    } else {
      this.pickedBins.set(covariate, set);
    }
    this.log.push({ action: "toggle-bin", detail: { covariate, binIndex } });
    return this.refresh();
  }

  setLasso(modality: Modality, polygon: [number, number][]): Promise<SelectionSnapshot> {
    this.lassos = { ...this.lassos, [modality]: polygon };
    this.log.push({ action: "lasso", detail: { modality, vertices: polygon.length } });
    return this.refresh();
  }

  clearLasso(modality: Modality): Promise<SelectionSnapshot> {
    const next = { ...this.lassos };
    delete next[modality];
    this.lassos = next;
    this.log.push({ action: "clear-lasso", detail: { modality } });
    return this.refresh();
  }

  clearAll(): Promise<SelectionSnapshot> {
    this.picked.clear();
    this.pickedBins.clear();
    this.lassos = {};
    this.log.push({ action: "clear-all", detail: null });
    return this.refresh();
  }

  clauses(): FilterClause[] {
    const out: FilterClause[] = [];
    for (const [covariate, categories] of this.picked) {
      out.push({ covariate, categories: [...categories].sort() });
    }
    for (const [covariate, bins] of this.pickedBins) {
      const entry = this.schema.get(covariate)!;
      const [lo] = entry.range!;
      const width = entry.bin_width!;
      const indices = [...bins];
      const start = lo + Math.min(...indices) * width;
      const end = lo + (Math.max(...indices) + 1) * width;
      out.push({ covariate, interval: [start, end] });
    }
    return out.sort((a, b) => a.covariate.localeCompare(b.covariate));
  }

  /** Re-query the server for the composed selection. */
  async refresh(): Promise<SelectionSnapshot> {
    const mySeq = ++this.seq;
    const clauses = this.clauses();
    const lassos = this.lassos;

    let ids: number[] | null = null;
    if (clauses.length > 0) {
      ids = await this.api.filter(clauses);
    }
    for (const modality of Object.keys(lassos) as Modality[]) {
      const polygon = lassos[modality]!;
      const lassoIds = await this.api.lasso(modality, polygon);
      ids = ids === null ? lassoIds : intersect(ids, lassoIds);
    }
    const histograms = await this.api.histogram(ids ?? undefined);

    if (mySeq !== this.seq) {
      // a newer interaction superseded this query; drop the stale response
      this.log.push({ action: "dropped-stale", detail: { seq: mySeq } });
      return this.committed;
    }
    this.committed = { ids, clauses, lassos, histograms, seq: mySeq };
    for (const listener of this.listeners) {
      listener(this.committed);
    }
    return this.committed;
  }
}
