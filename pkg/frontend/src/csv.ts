/** Minimal CSV reading with per-figure schema validation. */

import * as fs from "fs";

export interface Table {
  columns: string[];
  rows: number[][];
}

export class SchemaError extends Error {}

export function readCsv(path: string): Table {
  const text = fs.readFileSync(path, "utf-8").trim();
  if (text.length === 0) {
    throw new SchemaError(`empty CSV file: ${path}`);
  }
  const lines = text.split(/\r?\n/);
  const columns = lines[0].split(",").map((c) => c.trim());
  const rows: number[][] = [];
  for (let i = 1; i < lines.length; i++) {
    if (lines[i].trim() === "") continue;
    const parts = lines[i].split(",");
    if (parts.length !== columns.length) {
      throw new SchemaError(
        `row ${i + 1} of ${path} has ${parts.length} fields, expected ${columns.length}`,
      );
    }
    rows.push(parts.map((p) => (p.trim() === "true" ? 1 : p.trim() === "false" ? 0 : Number(p))));
  }
  return { columns, rows };
}

/** Check that every required column is present; name the missing ones. */
export function requireColumns(table: Table, required: string[], path: string): void {
  const missing = required.filter((c) => !table.columns.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(
      `${path} is missing required column(s): ${missing.join(", ")}`,
    );
  }
}

export function column(table: Table, name: string): number[] {
  const idx = table.columns.indexOf(name);
  return table.rows.map((r) => r[idx]);
}
