/** Pure drawing helpers: path strings, colors, number formatting.
 *
 * These map service-provided values onto pixels and never transform them
 * numerically beyond the coordinate scaling itself.
 */

/** SVG path through (xs, ys); null values break the line into segments. */
export function svgPath(
  xs: number[],
  ys: (number | null)[],
  xmax: number,
  ymax: number,
  width: number,
  height: number,
): string {
  const parts: string[] = [];
  let pen = false;
  const n = Math.min(xs.length, ys.length);
  for (let i = 0; i < n; i++) {
    const y = ys[i];
    if (y === null || !isFinite(y)) {
      pen = false;
      continue;
    }
    const px = xmax > 0 ? (xs[i] / xmax) * width : 0;
    const py = height - (ymax > 0 ? (y / ymax) * height : 0);
    parts.push(`${pen ? "L" : "M"}${px.toFixed(2)},${py.toFixed(2)}`);
    pen = true;
  }
  return parts.join(" ");
}

const PALETTE = [
  "#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee",
  "#aa3377", "#bbbbbb", "#44aa99", "#999933", "#882255",
];

/** Stable color per class id. */
export function classColor(k: number): string {
  if (k < 0) return "#222222";
  return PALETTE[k % PALETTE.length];
}

/** Compact numeric display; null and undefined become a dash. */
export function fmt(v: number | null | undefined, digits = 3): string {
  if (v === null || v === undefined || !isFinite(v)) return "–";
  return v.toFixed(digits);
}

/** Upper bound for a probability axis: a touch above the data, max 1. */
export function yAxisMax(values: (number | null)[]): number {
  let top = 0;
  for (const v of values) {
    if (v !== null && isFinite(v) && v > top) top = v;
  }
  return Math.min(1, top * 1.15 + 0.01);
}
