import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { dirname, resolve } from "node:path";

import { isEmpty, readTable, requireColumns } from "./csv.js";
import { REQUIRED_COLUMNS, RENDERERS, type Overlays } from "./figures.js";
import { emptyAxes } from "./svg.js";

/** One figure request: which CSV, which figure kind, where to write it. */
export interface PlotSpec {
  csv: string;
  kind: string;
  out: string;
  overlays?: Overlays;
}

export class SpecError extends Error {}

export function loadSpec(path: string): PlotSpec {
  let parsed: unknown;
  try {
    parsed = JSON.parse(readFileSync(path, "utf-8"));
  } catch (e) {
    throw new SpecError(`unreadable plot spec ${path}: ${(e as Error).message}`);
  }
  const spec = parsed as Partial<PlotSpec>;
  for (const field of ["csv", "kind", "out"] as const) {
    if (typeof spec[field] !== "string" || spec[field] === "") {
      throw new SpecError(`plot spec ${path} needs a string "${field}" field`);
    }
  }
  if (!(spec.kind! in RENDERERS)) {
    throw new SpecError(
      `unknown plot kind "${spec.kind}" (expected one of ${Object.keys(RENDERERS).sort().join(", ")})`,
    );
  }
  const base = dirname(resolve(path));
  return {
    csv: resolve(base, spec.csv!),
    kind: spec.kind!,
    out: resolve(base, spec.out!),
    overlays: spec.overlays ?? {},
  };
}

export interface RenderResult {
  figure: string;
  kind: string;
  csv: string;
  summary: Record<string, unknown>;
  warning?: string;
}

/**
 * Render one spec to its SVG file.
 *
 * An empty CSV still produces a figure (bare axes) and only warns; a CSV
 * that has rows but lacks a referenced column raises MissingColumnError.
 */
export function render(spec: PlotSpec): RenderResult {
  if (!(spec.kind in RENDERERS)) {
    throw new SpecError(`unknown plot kind "${spec.kind}"`);
  }
  const table = readTable(spec.csv);
  let svg: string;
  let summary: Record<string, unknown> = {};
  let warning: string | undefined;
  if (isEmpty(table)) {
    svg = emptyAxes(`${spec.kind} (empty input)`, "", "");
    summary = { points: 0 };
    warning = `empty CSV ${spec.csv}: rendered empty axes`;
  } else {
    requireColumns(table, REQUIRED_COLUMNS[spec.kind]);
    const fig = RENDERERS[spec.kind](table, spec.overlays ?? {});
    svg = fig.svg;
    summary = fig.summary;
    warning = fig.warning;
  }
  mkdirSync(dirname(spec.out), { recursive: true });
  writeFileSync(spec.out, svg + "\n");
  const out: RenderResult = {
    figure: spec.out,
    kind: spec.kind,
    csv: spec.csv,
    summary,
  };
  if (warning) out.warning = warning;
  return out;
}
