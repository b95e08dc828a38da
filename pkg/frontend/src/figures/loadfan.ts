/** Load fan: per-scenario aggregate demand, mean line inside the p05-p95 band. */

import { basename } from "node:path";
import { readCsv, num } from "../schema.js";
import { bandPolygon, document, frame, polyline, text } from "../svg.js";

const COLS = ["slot", "mean_kw", "p05_kw", "p95_kw"];

export function renderLoadFan(files: string[]): string {
  const panels = files.map((file) => ({
    file,
    rows: readCsv(file, COLS).sort((a, b) => num(a, "slot", file) - num(b, "slot", file)),
  }));
  const yMax = Math.max(...panels.flatMap(({ file, rows }) =>
    rows.map((r) => num(r, "p95_kw", file))), 1e-9);
  const panelH = 170;
  const parts: string[] = [];
  panels.forEach(({ file, rows }, pi) => {
    const y0 = 30 + pi * (panelH + 55);
    const { sx, sy, marks } = frame({
      x: 60, y: y0, width: 440, height: panelH,
      xDomain: [0, 47], yDomain: [0, yMax],
    }, "half-hour slot", "load (kW)", [0, 12, 24, 36, 47]);
    const xs = rows.map((r) => sx(num(r, "slot", file)));
    parts.push(marks);
    parts.push(bandPolygon(xs,
      rows.map((r) => sy(num(r, "p05_kw", file))),
      rows.map((r) => sy(num(r, "p95_kw", file))),
      { fill: "#4e79a7", opacity: 0.25, class: "band" }));
    parts.push(polyline(xs, rows.map((r) => sy(num(r, "mean_kw", file))),
      { stroke: "#4e79a7", "stroke-width": 1.5, class: "mean" }));
    parts.push(text(280, y0 - 8, basename(file, ".csv"),
      { "text-anchor": "middle", "font-size": 12 }));
  });
  return document(540, 30 + panels.length * (panelH + 55), parts.join(""));
}
