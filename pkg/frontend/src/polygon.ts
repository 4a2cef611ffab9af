/** Lasso polygon helpers: pointer traces arrive at move granularity and are
 * simplified to a bounded vertex count before posting. */

export const MAX_LASSO_VERTICES = 64;

/** Uniformly decimate a pointer trace, always keeping first and last points. */
export function simplifyPolygon(
  trace: [number, number][],
  maxVertices: number = MAX_LASSO_VERTICES,
): [number, number][] {
  if (maxVertices < 3) {
    throw new Error("a polygon needs at least 3 vertices");
  }
  if (trace.length <= maxVertices) {
    return trace.slice();
  }
  const out: [number, number][] = [];
  const last = trace.length - 1;
  for (let i = 0; i < maxVertices - 1; i++) {
    const idx = Math.round((i * last) / (maxVertices - 1));
    out.push(trace[idx]);
  }
  out.push(trace[last]);
  return out;
}

/** Screen-space pointer positions to embedding coordinates. */
export function screenToData(
  points: [number, number][],
  transform: { x: (px: number) => number; y: (py: number) => number },
): [number, number][] {
  return points.map(([px, py]) => [transform.x(px), transform.y(py)]);
}
