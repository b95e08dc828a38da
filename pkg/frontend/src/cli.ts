/** `render <figure-id> --in <files...> --out <image>` */

import { writeFileSync } from "node:fs";
import { SchemaError } from "./schema.js";
import { renderAdmd } from "./figures/admd.js";
import { renderComposition } from "./figures/composition.js";
import { renderElbow } from "./figures/elbow.js";
import { renderHeatmaps } from "./figures/heatmaps.js";
import { renderLoadFan } from "./figures/loadfan.js";
import { renderProfiles } from "./figures/profiles.js";

export const FIGURES: Record<string, (files: string[]) => string> = {
  elbow: renderElbow,
  profiles: renderProfiles,
  composition: renderComposition,
  heatmaps: renderHeatmaps,
  loadfan: renderLoadFan,
  admd: renderAdmd,
};

const USAGE = "usage: render <elbow|profiles|composition|heatmaps|loadfan|admd>" +
  " --in <files...> --out <image.svg>";

export function parseArgs(argv: string[]): { id: string; inputs: string[]; out: string } {
  const [id, ...rest] = argv;
  if (!id || !(id in FIGURES)) {
    throw new Error(`${USAGE}\nunknown figure id: ${id ?? "(none)"}`);
  }
  const inputs: string[] = [];
  let out = "";
  for (let i = 0; i < rest.length; i++) {
    if (rest[i] === "--in") {
      while (i + 1 < rest.length && !rest[i + 1].startsWith("--")) {
        inputs.push(rest[++i]);
      }
    } else if (rest[i] === "--out") {
      out = rest[++i] ?? "";
    } else {
      throw new Error(`${USAGE}\nunexpected argument: ${rest[i]}`);
    }
  }
  if (inputs.length === 0 || !out) {
    throw new Error(USAGE);
  }
  return { id, inputs, out };
}

export function main(argv: string[]): number {
  try {
    const { id, inputs, out } = parseArgs(argv);
    writeFileSync(out, FIGURES[id](inputs), "utf-8");
    return 0;
  } catch (e) {
    const kind = e instanceof SchemaError ? "schema error" : "error";
    console.error(`${kind}: ${(e as Error).message}`);
    return 1;
  }
}
