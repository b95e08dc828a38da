/** Minimal string-based SVG construction: elements, scales, axes. */

export type Attrs = Record<string, string | number>;

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function fmt(v: string | number): string {
  return typeof v === "number" ? String(Math.round(v * 1000) / 1000) : esc(v);
}

export function el(tag: string, attrs: Attrs, content = ""): string {
  const a = Object.entries(attrs).map(([k, v]) => ` ${k}="${fmt(v)}"`).join("");
  return content === "" ? `<${tag}${a}/>` : `<${tag}${a}>${content}</${tag}>`;
}

export function text(x: number, y: number, s: string, attrs: Attrs = {}): string {
  return el("text", { x, y, "font-size": 10, "font-family": "sans-serif", ...attrs },
    esc(s));
}

export type Scale = (x: number) => number;

export function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  return (x) => r0 + ((x - d0) / span) * (r1 - r0);
}

export function ticks(lo: number, hi: number, count = 5): number[] {
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (span / count) / step;
  const s = step * (err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1);
  const out: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-9; v += s) {
    out.push(Math.round(v * 1e9) / 1e9);
  }
  return out;
}

export function polyline(xs: number[], ys: number[], attrs: Attrs): string {
  const pts = xs.map((x, i) => `${fmt(x)},${fmt(ys[i])}`).join(" ");
  return el("polyline", { points: pts, fill: "none", ...attrs });
}

export function bandPolygon(xs: number[], lo: number[], hi: number[],
  attrs: Attrs): string {
  const up = xs.map((x, i) => `${fmt(x)},${fmt(hi[i])}`);
  const down = xs.map((x, i) => `${fmt(x)},${fmt(lo[i])}`).reverse();
  return el("polygon", { points: [...up, ...down].join(" "), ...attrs });
}

export interface Frame {
  x: number; y: number; width: number; height: number;
  xDomain: [number, number]; yDomain: [number, number];
}

/** Axes, tick labels, and the two scales for a plot area. */
export function frame(f: Frame, xLabel: string, yLabel: string,
  xTickValues?: number[]): { sx: Scale; sy: Scale; marks: string } {
  const sx = linearScale(f.xDomain[0], f.xDomain[1], f.x, f.x + f.width);
  const sy = linearScale(f.yDomain[0], f.yDomain[1], f.y + f.height, f.y);
  const parts: string[] = [];
  parts.push(el("line", { x1: f.x, y1: f.y + f.height, x2: f.x + f.width,
    y2: f.y + f.height, stroke: "#333" }));
  parts.push(el("line", { x1: f.x, y1: f.y, x2: f.x, y2: f.y + f.height,
    stroke: "#333" }));
  for (const t of xTickValues ?? ticks(f.xDomain[0], f.xDomain[1])) {
    parts.push(el("line", { x1: sx(t), y1: f.y + f.height, x2: sx(t),
      y2: f.y + f.height + 4, stroke: "#333" }));
    parts.push(text(sx(t), f.y + f.height + 14, String(t),
      { "text-anchor": "middle" }));
  }
  for (const t of ticks(f.yDomain[0], f.yDomain[1])) {
    parts.push(el("line", { x1: f.x - 4, y1: sy(t), x2: f.x, y2: sy(t),
      stroke: "#333" }));
    parts.push(text(f.x - 6, sy(t) + 3, String(t), { "text-anchor": "end" }));
  }
  parts.push(text(f.x + f.width / 2, f.y + f.height + 28, xLabel,
    { "text-anchor": "middle" }));
  parts.push(text(f.x - 34, f.y + f.height / 2, yLabel, {
    "text-anchor": "middle",
    transform: `rotate(-90 ${f.x - 34} ${f.y + f.height / 2})`,
  }));
  return { sx, sy, marks: parts.join("") };
}

export function document(width: number, height: number, body: string): string {
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
    `height="${height}" viewBox="0 0 ${width} ${height}">` +
    el("rect", { x: 0, y: 0, width, height, fill: "white" }) + body + "</svg>";
}

/** Dark-to-bright sequential color for values in [0, 1]. */
export function sequentialColor(v: number): string {
  const stops: Array<[number, number, number]> = [
    [68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37],
  ];
  const t = Math.min(Math.max(v, 0), 1) * (stops.length - 1);
  const i = Math.min(Math.floor(t), stops.length - 2);
  const f = t - i;
  const c = stops[i].map((a, j) => Math.round(a + f * (stops[i + 1][j] - a)));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}

export const CATEGORY_COLORS = ["#4e79a7", "#f28e2b", "#59a14f", "#9c9ca1",
  "#e15759", "#76b7b2"];
