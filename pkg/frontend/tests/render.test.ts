import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { FIGURES, main, parseArgs } from "../src/cli.js";
import { SchemaError } from "../src/schema.js";

const FIX = join(__dirname, "fixtures");

const INPUTS: Record<string, string[]> = {
  elbow: [join(FIX, "cluster/elbow.csv")],
  profiles: [join(FIX, "cluster/profiles.csv")],
  composition: [join(FIX, "cluster/composition.csv")],
  heatmaps: [join(FIX, "fit/heatmap.csv")],
  loadfan: [join(FIX, "sim/naive.csv"), join(FIX, "sim/fixed_set.csv"),
    join(FIX, "sim/resampled.csv")],
  admd: [join(FIX, "admd/admd.csv")],
};

describe("figure suite", () => {
  for (const id of Object.keys(FIGURES)) {
    it(`renders ${id} from the reference bundle`, () => {
      const svg = FIGURES[id](INPUTS[id]);
      expect(svg.startsWith("<svg")).toBe(true);
      expect(svg.endsWith("</svg>")).toBe(true);
      expect(svg.length).toBeGreaterThan(500);
    });

    it(`${id} is idempotent`, () => {
      expect(FIGURES[id](INPUTS[id])).toBe(FIGURES[id](INPUTS[id]));
    });
  }
});

describe("elbow", () => {
  it("draws one point per CSV row", () => {
    const rows = readFileSync(INPUTS.elbow[0], "utf-8").trim().split("\n").length - 1;
    const svg = FIGURES.elbow(INPUTS.elbow);
    expect((svg.match(/class="point"/g) ?? []).length).toBe(rows);
  });
});

describe("heatmaps", () => {
  it("lays out 3x2 panels of 48x6 cells", () => {
    const svg = FIGURES.heatmaps(INPUTS.heatmaps);
    expect((svg.match(/class="panel"/g) ?? []).length).toBe(6);
    expect((svg.match(/class="cell"/g) ?? []).length).toBe(1728);
  });
});

describe("loadfan", () => {
  it("draws a band and a mean line per scenario", () => {
    const svg = FIGURES.loadfan(INPUTS.loadfan);
    expect((svg.match(/class="band"/g) ?? []).length).toBe(3);
    expect((svg.match(/class="mean"/g) ?? []).length).toBe(3);
  });

  it("fixture mean lies inside the p05-p95 band", () => {
    for (const file of INPUTS.loadfan) {
      const lines = readFileSync(file, "utf-8").trim().split("\n").slice(1);
      for (const line of lines) {
        const [, mean, p05, p95] = line.split(",").map(Number);
        expect(p05).toBeLessThanOrEqual(mean + 1e-9);
        expect(mean).toBeLessThanOrEqual(p95 + 1e-9);
      }
    }
  });
});

describe("composition", () => {
  it("stacks at most one segment per day and cluster", () => {
    const svg = FIGURES.composition(INPUTS.composition);
    const segments = (svg.match(/class="segment"/g) ?? []).length;
    expect(segments).toBeGreaterThanOrEqual(7);
    expect(segments).toBeLessThanOrEqual(7 * 4);
  });
});

describe("admd", () => {
  it("draws one bar per region", () => {
    const svg = FIGURES.admd(INPUTS.admd);
    expect((svg.match(/class="bar"/g) ?? []).length).toBe(3);
  });
});

describe("schema validation", () => {
  it("names the offending column on mismatch", () => {
    const dir = mkdtempSync(join(tmpdir(), "evload-fig-"));
    const bad = join(dir, "bad.csv");
    writeFileSync(bad, "k,wrong_name\n1,2.0\n", "utf-8");
    expect(() => FIGURES.elbow([bad]))
      .toThrowError(/missing column "sum_of_squares"/);
    try {
      FIGURES.elbow([bad]);
    } catch (e) {
      expect(e).toBeInstanceOf(SchemaError);
    }
  });

  it("rejects non-numeric cells naming the column", () => {
    const dir = mkdtempSync(join(tmpdir(), "evload-fig-"));
    const bad = join(dir, "bad.csv");
    writeFileSync(bad, "k,sum_of_squares\n1,oops\n", "utf-8");
    expect(() => FIGURES.elbow([bad]))
      .toThrowError(/column "sum_of_squares" has non-numeric value/);
  });
});

describe("cli", () => {
  it("parses figure id, inputs, and output", () => {
    const parsed = parseArgs(["loadfan", "--in", "a.csv", "b.csv",
      "--out", "fig.svg"]);
    expect(parsed).toEqual({ id: "loadfan", inputs: ["a.csv", "b.csv"],
      out: "fig.svg" });
  });

  it("rejects unknown figure ids", () => {
    expect(() => parseArgs(["choropleth", "--in", "x", "--out", "y"]))
      .toThrowError(/unknown figure id/);
  });

  it("writes an SVG file and returns 0", () => {
    const dir = mkdtempSync(join(tmpdir(), "evload-fig-"));
    const out = join(dir, "elbow.svg");
    expect(main(["elbow", "--in", INPUTS.elbow[0], "--out", out])).toBe(0);
    expect(readFileSync(out, "utf-8").startsWith("<svg")).toBe(true);
  });

  it("returns nonzero on schema errors", () => {
    const dir = mkdtempSync(join(tmpdir(), "evload-fig-"));
    const bad = join(dir, "bad.csv");
    writeFileSync(bad, "nope\n1\n", "utf-8");
    expect(main(["elbow", "--in", bad, "--out", join(dir, "x.svg")])).toBe(1);
  });
});
