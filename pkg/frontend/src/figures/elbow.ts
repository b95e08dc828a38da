/** Elbow curve: clustering sum of squares against k. */

import { readCsv, num } from "../schema.js";
import { document, el, frame, polyline, text } from "../svg.js";

export function renderElbow(files: string[]): string {
  const rows = readCsv(files[0], ["k", "sum_of_squares"]);
  const ks = rows.map((r) => num(r, "k", files[0]));
  const sos = rows.map((r) => num(r, "sum_of_squares", files[0]));
  const { sx, sy, marks } = frame({
    x: 55, y: 20, width: 420, height: 260,
    xDomain: [Math.min(...ks), Math.max(...ks)],
    yDomain: [0, Math.max(...sos)],
  }, "number of clusters k", "sum of squares", ks);
  const pts = ks.map((k, i) =>
    el("circle", { cx: sx(k), cy: sy(sos[i]), r: 3, fill: "#4e79a7",
      class: "point" })).join("");
  const line = polyline(ks.map(sx), sos.map(sy), { stroke: "#4e79a7",
    "stroke-width": 1.5 });
  const title = text(265, 12, "Cluster count selection", { "text-anchor": "middle",
    "font-size": 12 });
  return document(500, 320, marks + line + pts + title);
}
