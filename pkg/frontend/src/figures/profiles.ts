/** Cluster speed profiles: mean line inside a p05-p95 band, one panel per cluster. */

import { readCsv, num } from "../schema.js";
import { bandPolygon, document, frame, polyline, text, CATEGORY_COLORS } from "../svg.js";

const COLS = ["day_type", "cluster", "slot", "mean_mph", "p05_mph", "p95_mph"];

export function renderProfiles(files: string[]): string {
  const file = files[0];
  const rows = readCsv(file, COLS);
  const clusters = [...new Set(rows.map((r) => r.cluster))];
  const yMax = Math.max(...rows.map((r) => num(r, "p95_mph", file)), 1);
  const panelW = 260;
  const parts: string[] = [];
  clusters.forEach((c, ci) => {
    const sub = rows.filter((r) => r.cluster === c)
      .sort((a, b) => num(a, "slot", file) - num(b, "slot", file));
    const x0 = 55 + ci * (panelW + 40);
    const { sx, sy, marks } = frame({
      x: x0, y: 30, width: panelW, height: 220,
      xDomain: [0, 47], yDomain: [0, yMax],
    }, "half-hour slot", ci === 0 ? "speed (mph)" : "", [0, 12, 24, 36, 47]);
    const xs = sub.map((r) => sx(num(r, "slot", file)));
    parts.push(marks);
    parts.push(bandPolygon(xs,
      sub.map((r) => sy(num(r, "p05_mph", file))),
      sub.map((r) => sy(num(r, "p95_mph", file))),
      { fill: CATEGORY_COLORS[ci % CATEGORY_COLORS.length], opacity: 0.25,
        class: "band" }));
    parts.push(polyline(xs, sub.map((r) => sy(num(r, "mean_mph", file))),
      { stroke: CATEGORY_COLORS[ci % CATEGORY_COLORS.length],
        "stroke-width": 1.5, class: "mean" }));
    parts.push(text(x0 + panelW / 2, 20, `cluster ${c} (${sub[0]?.day_type ?? ""})`,
      { "text-anchor": "middle", "font-size": 12 }));
  });
  return document(55 + clusters.length * (panelW + 40), 300, parts.join(""));
}
