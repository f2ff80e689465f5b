#!/usr/bin/env node
import { join, relative } from "node:path";
import { pathToFileURL } from "node:url";

import { MissingColumnError } from "./csv.js";
import { defaultSpecs, discoverRuns } from "./discover.js";
import { loadSpec, render, type RenderResult } from "./spec.js";

const EXIT_OK = 0;
const EXIT_USAGE = 1;
const EXIT_MISSING_COLUMN = 2;

const USAGE = `usage:
  plots render <spec.json>
  plots all <output-dir> [--out DIR]

render draws one figure from a JSON spec {csv, kind, out, overlays}.
all discovers run manifests below <output-dir> and draws the default
figure for each experiment kind; figures land in --out
(default: <output-dir>/figures).  One JSON summary line is printed per
figure.`;

function emit(result: RenderResult, base?: string): void {
  const line: Record<string, unknown> = {
    figure: base ? relative(base, result.figure) : result.figure,
    kind: result.kind,
    ...result.summary,
  };
  process.stdout.write(JSON.stringify(line) + "\n");
  if (result.warning) {
    process.stderr.write(`warning: ${result.warning}\n`);
  }
}

function fail(message: string, code: number): number {
  process.stderr.write(`plots: ${message}\n`);
  return code;
}

function cmdRender(args: string[]): number {
  if (args.length !== 1) return fail(USAGE, EXIT_USAGE);
  try {
    const result = render(loadSpec(args[0]));
    emit(result);
    return EXIT_OK;
  } catch (e) {
    if (e instanceof MissingColumnError) {
      return fail(e.message, EXIT_MISSING_COLUMN);
    }
    return fail((e as Error).message, EXIT_USAGE);
  }
}

function cmdAll(args: string[]): number {
  const positional: string[] = [];
  let outDir: string | undefined;
  for (let i = 0; i < args.length; i++) {
    if (args[i] === "--out") {
      outDir = args[++i];
      if (outDir === undefined) return fail("--out needs a directory", EXIT_USAGE);
    } else {
      positional.push(args[i]);
    }
  }
  if (positional.length !== 1) return fail(USAGE, EXIT_USAGE);
  const root = positional[0];
  const figures = outDir ?? join(root, "figures");
  const runs = discoverRuns(root);
  if (runs.length === 0) {
    return fail(`no run manifests found under ${root}`, EXIT_USAGE);
  }
  let missing = 0;
  for (const run of runs) {
    for (const spec of defaultSpecs(run, figures)) {
      try {
        emit(render(spec), figures);
      } catch (e) {
        if (e instanceof MissingColumnError) {
          process.stderr.write(`plots: ${e.message}\n`);
          missing += 1;
        } else {
          return fail((e as Error).message, EXIT_USAGE);
        }
      }
    }
  }
  return missing > 0 ? EXIT_MISSING_COLUMN : EXIT_OK;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  if (command === "render") return cmdRender(rest);
  if (command === "all") return cmdAll(rest);
  if (command === undefined || command === "--help" || command === "-h") {
    process.stderr.write(USAGE + "\n");
    return command === undefined ? EXIT_USAGE : EXIT_OK;
  }
  return fail(`unknown command "${command}"\n${USAGE}`, EXIT_USAGE);
}

if (import.meta.url === pathToFileURL(process.argv[1] ?? "").href) {
  process.exit(main(process.argv.slice(2)));
}
