/** Regional peak-demand study: ranked bar chart of ADMD percent increase. */

import { readCsv, num } from "../schema.js";
import { document, el, linearScale, text, ticks } from "../svg.js";

const COLS = ["region", "baseline_admd_kw", "combined_admd_kw", "percent_increase"];

export function renderAdmd(files: string[]): string {
  const file = files[0];
  const rows = readCsv(file, COLS);  // already ranked by the pipeline
  const vMax = Math.max(...rows.map((r) => num(r, "percent_increase", file)), 1e-9);
  const barH = 22;
  const height = 60 + rows.length * (barH + 10);
  const sx = linearScale(0, vMax, 120, 500);
  const parts: string[] = [];
  rows.forEach((r, i) => {
    const y = 30 + i * (barH + 10);
    const v = num(r, "percent_increase", file);
    parts.push(el("rect", { x: 120, y, width: sx(v) - 120, height: barH,
      fill: "#e15759", class: "bar" }));
    parts.push(text(114, y + barH / 2 + 3, r.region, { "text-anchor": "end" }));
    parts.push(text(sx(v) + 4, y + barH / 2 + 3, `${v.toFixed(1)}%`));
  });
  const axisY = 30 + rows.length * (barH + 10) + 4;
  parts.push(el("line", { x1: 120, y1: axisY, x2: 500, y2: axisY, stroke: "#333" }));
  for (const t of ticks(0, vMax)) {
    parts.push(el("line", { x1: sx(t), y1: axisY, x2: sx(t), y2: axisY + 4,
      stroke: "#333" }));
    parts.push(text(sx(t), axisY + 14, String(t), { "text-anchor": "middle" }));
  }
  parts.push(text(310, axisY + 28, "ADMD increase (%)", { "text-anchor": "middle" }));
  return document(560, height, parts.join(""));
}
