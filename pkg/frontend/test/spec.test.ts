import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { MissingColumnError } from "../src/csv.js";
import { SpecError, loadSpec, render } from "../src/spec.js";

function scratch(): string {
  return mkdtempSync(join(tmpdir(), "plots-"));
}

const SPECTRUM_CSV = "n,eig_index,eigenvalue\n1,0,0.5\n1,1,-0.3\n";

describe("render", () => {
  it("writes the figure and reports the summary", () => {
    const dir = scratch();
    const csv = join(dir, "spectrum.csv");
    writeFileSync(csv, SPECTRUM_CSV);
    const out = join(dir, "fig.svg");
    const res = render({ csv, kind: "spectrum", out, overlays: { k: 3 } });
    expect(readFileSync(out, "utf-8")).toContain("</svg>");
    expect(res.summary.outside_band_mass).toBe(0);
    expect(res.warning).toBeUndefined();
  });

  it("renders empty axes with a warning on an empty CSV", () => {
    const dir = scratch();
    const csv = join(dir, "empty.csv");
    writeFileSync(csv, "");
    const out = join(dir, "fig.svg");
    const res = render({ csv, kind: "spectrum", out });
    expect(res.warning).toMatch(/empty CSV/);
    expect(readFileSync(out, "utf-8")).toContain("(no data)");
  });

  it("treats a header-only CSV as empty rather than broken", () => {
    const dir = scratch();
    const csv = join(dir, "header.csv");
    writeFileSync(csv, "n,eig_index,eigenvalue\n");
    const res = render({ csv, kind: "spectrum", out: join(dir, "fig.svg") });
    expect(res.warning).toMatch(/empty CSV/);
  });

  it("raises MissingColumnError naming the absent column", () => {
    const dir = scratch();
    const csv = join(dir, "bad.csv");
    writeFileSync(csv, "n,eig_index,value\n1,0,0.5\n");
    const attempt = () =>
      render({ csv, kind: "spectrum", out: join(dir, "fig.svg") });
    expect(attempt).toThrow(MissingColumnError);
    expect(attempt).toThrow(/missing column "eigenvalue"/);
  });

  it("is idempotent and leaves the input CSV untouched", () => {
    const dir = scratch();
    const csv = join(dir, "spectrum.csv");
    writeFileSync(csv, SPECTRUM_CSV);
    const out = join(dir, "fig.svg");
    render({ csv, kind: "spectrum", out, overlays: { k: 3 } });
    const first = readFileSync(out, "utf-8");
    render({ csv, kind: "spectrum", out, overlays: { k: 3 } });
    expect(readFileSync(out, "utf-8")).toBe(first);
    expect(readFileSync(csv, "utf-8")).toBe(SPECTRUM_CSV);
  });
});

describe("loadSpec", () => {
  it("resolves csv and out relative to the spec file", () => {
    const dir = scratch();
    const path = join(dir, "fig.json");
    writeFileSync(path, JSON.stringify({ csv: "a.csv", kind: "walk", out: "b.svg" }));
    const spec = loadSpec(path);
    expect(spec.csv).toBe(join(dir, "a.csv"));
    expect(spec.out).toBe(join(dir, "b.svg"));
  });

  it("rejects unknown kinds with the known list", () => {
    const dir = scratch();
    const path = join(dir, "fig.json");
    writeFileSync(path, JSON.stringify({ csv: "a.csv", kind: "sorcery", out: "b.svg" }));
    expect(() => loadSpec(path)).toThrow(SpecError);
    expect(() => loadSpec(path)).toThrow(/unknown plot kind "sorcery"/);
  });

  it("rejects specs without the required fields", () => {
    const dir = scratch();
    const path = join(dir, "fig.json");
    writeFileSync(path, JSON.stringify({ kind: "walk" }));
    expect(() => loadSpec(path)).toThrow(/"csv"/);
  });
});
