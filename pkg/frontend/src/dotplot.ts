/** Model behind the perturbation dot plot: one row per latent dimension,
 * horizontal position is the value, axis range is ±R per dimension. At most
 * one row may be dirty (mid-drag) between server round trips. */

export interface DotRow {
  value: number;
  range: number; // display half-range R for this dimension
  dirty: boolean;
}

export interface DragResult {
  /** clamped display value */
  value: number;
  /** false when the pointer left ±R: the dot pins to the edge, no request */
  fire: boolean;
}

export class DotPlotModel {
  readonly rows: DotRow[];
  private readonly baseline: number[];

  constructor(values: number[], ranges: number[]) {
    if (values.length !== ranges.length) {
      throw new Error("values and ranges must align");
    }
    this.baseline = values.slice();
    this.rows = values.map((value, i) => ({
      value,
      range: ranges[i],
      dirty: false,
    }));
  }

  /** Current vector, with any in-progress edit applied. */
  vector(): number[] {
    return this.rows.map((row) => row.value);
  }

  dirtyCount(): number {
    return this.rows.filter((row) => row.dirty).length;
  }

  drag(k: number, rawValue: number): DragResult {
    const row = this.rows[k];
    if (!row) {
      throw new Error(`no dimension ${k}`);
    }
    // a new drag supersedes any other in-progress edit
    for (let i = 0; i < this.rows.length; i++) {
      if (i !== k && this.rows[i].dirty) {
        this.rows[i].value = this.baseline[i];
        this.rows[i].dirty = false;
      }
    }
    const r = row.range;
    if (rawValue > r || rawValue < -r) {
      row.value = Math.max(-r, Math.min(r, rawValue));
      row.dirty = true;
      return { value: row.value, fire: false };
    }
    row.value = rawValue;
    row.dirty = row.value !== this.baseline[k];
    return { value: row.value, fire: true };
  }

  /** Server acknowledged the edit: it becomes the new baseline. */
  commit(k: number): void {
    this.baseline[k] = this.rows[k].value;
    this.rows[k].dirty = false;
  }

  /** Abandon the edit (e.g. drag returned to the original value). */
  reset(k: number): void {
    this.rows[k].value = this.baseline[k];
    this.rows[k].dirty = false;
  }
}
