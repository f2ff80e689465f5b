import { readFileSync, readdirSync, statSync } from "node:fs";
import { basename, dirname, join } from "node:path";

import type { PlotSpec } from "./spec.js";
import { RENDERERS, type Overlays } from "./figures.js";

interface RunManifest {
  experiment?: string;
  outputs?: Array<{ file?: string }>;
  [key: string]: unknown;
}

export interface RunDir {
  dir: string;
  manifest: RunManifest;
}

/** All run directories below root, identified by their manifest.json. */
export function discoverRuns(root: string): RunDir[] {
  const found: RunDir[] = [];
  const walk = (dir: string) => {
    let entries: string[];
    try {
      entries = readdirSync(dir).sort();
    } catch {
      return;
    }
    for (const entry of entries) {
      const path = join(dir, entry);
      if (entry === "manifest.json" && statSync(path).isFile()) {
        try {
          found.push({ dir, manifest: JSON.parse(readFileSync(path, "utf-8")) });
        } catch {
          // a malformed manifest marks no run; directories without one are skipped
        }
      } else if (statSync(path).isDirectory()) {
        walk(path);
      }
    }
  };
  walk(root);
  found.sort((a, b) => (a.dir < b.dir ? -1 : a.dir > b.dir ? 1 : 0));
  return found;
}

/** Manifest scalars (k, kappa_hat, fitted exponents, ...) become overlays. */
function overlaysOf(manifest: RunManifest): Overlays {
  const out: Overlays = {};
  for (const [key, value] of Object.entries(manifest)) {
    if (typeof value === "number" || typeof value === "string" || typeof value === "boolean") {
      out[key] = value;
    }
  }
  return out;
}

/** The default figure for every CSV a run produced. */
export function defaultSpecs(run: RunDir, outDir: string): PlotSpec[] {
  const kind = run.manifest.experiment;
  if (typeof kind !== "string" || !(kind in RENDERERS)) return [];
  const overlays = overlaysOf(run.manifest);
  const specs: PlotSpec[] = [];
  for (const output of run.manifest.outputs ?? []) {
    const file = output.file;
    if (typeof file !== "string" || !file.endsWith(".csv")) continue;
    const stem = basename(file, ".csv");
    const name = `${basename(run.dir)}__${stem}.svg`;
    specs.push({
      csv: join(run.dir, file),
      kind,
      out: join(outDir, name),
      overlays,
    });
  }
  return specs;
}

export function runName(run: RunDir): string {
  return basename(run.dir) || dirname(run.dir);
}
