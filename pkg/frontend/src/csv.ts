import { readFileSync } from "node:fs";

import { csvParse } from "d3-dsv";

/** Parsed CSV with its header order preserved. */
export interface Table {
  path: string;
  columns: string[];
  rows: Array<Record<string, string>>;
}

/** A referenced column is absent from the CSV header. */
export class MissingColumnError extends Error {
  readonly column: string;
  readonly path: string;

  constructor(column: string, path: string) {
    super(`missing column "${column}" in ${path}`);
    this.name = "MissingColumnError";
    this.column = column;
    this.path = path;
  }
}

export function readTable(path: string): Table {
  const text = readFileSync(path, "utf-8");
  if (text.trim() === "") {
    return { path, columns: [], rows: [] };
  }
  const parsed = csvParse(text);
  const rows = parsed.map((r) => ({ ...r })) as Array<Record<string, string>>;
  return { path, columns: [...parsed.columns], rows };
}

/** True when the table carries no data rows (header-only or blank file). */
export function isEmpty(table: Table): boolean {
  return table.rows.length === 0;
}

export function requireColumns(table: Table, needed: readonly string[]): void {
  for (const column of needed) {
    if (!table.columns.includes(column)) {
      throw new MissingColumnError(column, table.path);
    }
  }
}

/** Column as numbers; blank cells and non-numeric text are dropped. */
export function numbers(table: Table, column: string): number[] {
  const out: number[] = [];
  for (const row of table.rows) {
    const v = Number(row[column]);
    if (Number.isFinite(v)) out.push(v);
  }
  return out;
}

/** Distinct values of a column in first-appearance order. */
export function distinct(table: Table, column: string): string[] {
  const seen = new Set<string>();
  for (const row of table.rows) {
    const v = row[column];
    if (v !== undefined && !seen.has(v)) seen.add(v);
  }
  return [...seen];
}
