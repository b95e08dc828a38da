/** After-journey probability heatmaps: 3 clusters x 2 day types, 48x6 cells each.
 *
 * All six panels share one color scale so probabilities are comparable
 * across clusters and day types.
 */

import { readCsv, num } from "../schema.js";
import { document, el, sequentialColor, text } from "../svg.js";

const COLS = ["table", "d", "t", "k", "s", "probability"];
const DAY_TYPE = ["weekday", "weekend"];

export function renderHeatmaps(files: string[]): string {
  const file = files[0];
  const rows = readCsv(file, COLS).filter((r) => r.table === "after_journey");
  if (rows.length === 0) {
    throw new Error(`${file}: no after_journey rows`);
  }
  const pMax = Math.max(...rows.map((r) => num(r, "probability", file)), 1e-9);
  const cellW = 7;
  const cellH = 14;
  const panelW = 48 * cellW;
  const panelH = 6 * cellH;
  const parts: string[] = [];
  for (const row of rows) {
    const d = num(row, "d", file);
    const k = num(row, "k", file);
    const t = num(row, "t", file);
    const s = num(row, "s", file);
    const p = num(row, "probability", file);
    const x0 = 45 + (k - 1) * (panelW + 30);
    const y0 = 40 + d * (panelH + 50);
    parts.push(el("rect", {
      x: x0 + t * cellW, y: y0 + (5 - s) * cellH, width: cellW, height: cellH,
      fill: sequentialColor(p / pMax), class: "cell",
    }));
  }
  for (let d = 0; d < 2; d++) {
    for (let k = 1; k <= 3; k++) {
      const x0 = 45 + (k - 1) * (panelW + 30);
      const y0 = 40 + d * (panelH + 50);
      parts.push(el("rect", { x: x0, y: y0, width: panelW, height: panelH,
        fill: "none", stroke: "#333", class: "panel" }));
      parts.push(text(x0 + panelW / 2, y0 - 6,
        `cluster ${k}, ${DAY_TYPE[d]}`, { "text-anchor": "middle" }));
      parts.push(text(x0 + panelW / 2, y0 + panelH + 14, "half-hour slot",
        { "text-anchor": "middle" }));
    }
    parts.push(text(32, 40 + d * (panelH + 50) + panelH / 2, "SOC state", {
      "text-anchor": "middle",
      transform: `rotate(-90 32 ${40 + d * (panelH + 50) + panelH / 2})`,
    }));
  }
  // color bar
  const barX = 45 + 3 * (panelW + 30);
  for (let i = 0; i < 40; i++) {
    parts.push(el("rect", { x: barX, y: 200 - i * 4, width: 12, height: 4,
      fill: sequentialColor(i / 39) }));
  }
  parts.push(text(barX + 16, 204, "0"));
  parts.push(text(barX + 16, 48, pMax.toPrecision(2)));
  return document(barX + 60, 2 * (panelH + 50) + 40, parts.join(""));
}
