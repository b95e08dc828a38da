/** Weekly composition: stacked cluster shares per day of week. */

import { readCsv, num } from "../schema.js";
import { document, el, frame, text, CATEGORY_COLORS } from "../svg.js";

const DAY_NAMES = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];

export function renderComposition(files: string[]): string {
  const file = files[0];
  const rows = readCsv(file, ["day_of_week", "cluster", "share"]);
  const clusters = [...new Set(rows.map((r) => r.cluster))];
  const { sy, marks } = frame({
    x: 55, y: 20, width: 430, height: 260,
    xDomain: [0, 7], yDomain: [0, 1],
  }, "", "share of vehicle-days", []);
  const parts: string[] = [marks];
  const barW = 430 / 7 * 0.7;
  for (let dow = 0; dow < 7; dow++) {
    const x = 55 + (dow + 0.15) * (430 / 7);
    let acc = 0;
    for (const c of clusters) {
      const row = rows.find((r) => num(r, "day_of_week", file) === dow
        && r.cluster === c);
      if (!row) continue;
      const share = num(row, "share", file);
      if (share <= 0) continue;
      parts.push(el("rect", {
        x, y: sy(acc + share), width: barW, height: sy(acc) - sy(acc + share),
        fill: CATEGORY_COLORS[clusters.indexOf(c) % CATEGORY_COLORS.length],
        class: "segment",
      }));
      acc += share;
    }
    parts.push(text(x + barW / 2, 296, DAY_NAMES[dow], { "text-anchor": "middle" }));
  }
  clusters.forEach((c, i) => {
    const y = 30 + i * 16;
    parts.push(el("rect", { x: 500, y: y - 9, width: 10, height: 10,
      fill: CATEGORY_COLORS[i % CATEGORY_COLORS.length] }));
    parts.push(text(514, y, c === "U" ? "unused" : `cluster ${c}`));
  });
  return document(580, 320, parts.join(""));
}
