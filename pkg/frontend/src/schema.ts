/** CSV loading with column-level schema validation. */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export class SchemaError extends Error {}

export type Row = Record<string, string>;

/** Parse a CSV file and require the given columns, in any order. */
export function readCsv(file: string, columns: string[]): Row[] {
  let raw: string;
  try {
    raw = readFileSync(file, "utf-8");
  } catch (e) {
    throw new SchemaError(`cannot read ${file}: ${(e as Error).message}`);
  }
  const parsed = Papa.parse<Row>(raw.trim(), { header: true, skipEmptyLines: true });
  const fields = parsed.meta.fields ?? [];
  for (const col of columns) {
    if (!fields.includes(col)) {
      throw new SchemaError(`${file}: missing column "${col}"`);
    }
  }
  return parsed.data;
}

/** Numeric cell access; rejects non-finite values naming the column. */
export function num(row: Row, col: string, file: string): number {
  const v = Number(row[col]);
  if (!Number.isFinite(v)) {
    throw new SchemaError(`${file}: column "${col}" has non-numeric value "${row[col]}"`);
  }
  return v;
}
