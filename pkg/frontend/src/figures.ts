import { bin, max, min, range } from "d3-array";

import { distinct, numbers, type Table } from "./csv.js";
import {
  COLORS, HEIGHT, MARGIN, WIDTH, axes, close, esc, frame, hline, label,
  linePath, note, open, px, stepPath, vline,
} from "./svg.js";

/** Values a renderer may pull from the run manifest (k, fitted slopes, ...). */
export type Overlays = Record<string, unknown>;

export interface Figure {
  svg: string;
  summary: Record<string, unknown>;
  warning?: string;
}

type Renderer = (table: Table, overlays: Overlays) => Figure;

function num(overlays: Overlays, key: string): number | undefined {
  const v = overlays[key];
  return typeof v === "number" && Number.isFinite(v) ? v : undefined;
}

function legend(names: string[]): string {
  return names
    .map((name, i) => {
      const y = MARGIN.top + 14 + 14 * i;
      const x = WIDTH - MARGIN.right - 150;
      return [
        `<line x1="${px(x)}" y1="${px(y - 4)}" x2="${px(x + 18)}" y2="${px(y - 4)}" stroke="${COLORS[i % COLORS.length]}" stroke-width="2"/>`,
        `<text x="${px(x + 24)}" y="${px(y)}" fill="#333333">${esc(name)}</text>`,
      ].join("\n");
    })
    .join("\n");
}

function histogram(
  values: number[], lo: number, hi: number, width: number,
): Array<{ x0: number; x1: number; length: number }> {
  const thresholds = range(lo, hi + width / 2, width);
  const bins = bin().domain([lo, hi]).thresholds(thresholds)(values);
  return bins.map((b) => ({ x0: b.x0 ?? lo, x1: b.x1 ?? hi, length: b.length }));
}

/** Eigenvalue histogram with the Kesten interval +-sqrt(2k-1)/k shaded. */
function renderSpectrum(table: Table, overlays: Overlays): Figure {
  const eigs = numbers(table, "eigenvalue");
  const k = num(overlays, "k");
  const band = k !== undefined ? Math.sqrt(2 * k - 1) / k : undefined;
  const bins = histogram(eigs, -1.1, 1.1, 0.05);
  const peak = max(bins, (b) => b.length) ?? 1;
  const f = frame([-1.1, 1.1], [0, Math.max(peak, 1)]);
  const parts = [open("averaging spectrum"), axes(f, "eigenvalue", "count")];
  if (band !== undefined) {
    parts.push(
      `<rect x="${px(f.x(-band))}" y="${px(MARGIN.top)}" width="${px(f.x(band) - f.x(-band))}" height="${px(HEIGHT - MARGIN.top - MARGIN.bottom)}" fill="#3567a6" fill-opacity="0.08"/>`,
      vline(f, -band, "#c3543c"),
      vline(f, band, "#c3543c"),
      note(f.x(band) + 4, MARGIN.top + 12, `Kesten band ${label(band)}`, "#c3543c"),
    );
  }
  for (const b of bins) {
    if (b.length === 0) continue;
    const x = f.x(b.x0);
    const w = f.x(b.x1) - f.x(b.x0);
    const y = f.y(b.length);
    parts.push(
      `<rect x="${px(x)}" y="${px(y)}" width="${px(w - 0.5)}" height="${px(f.y(0) - y)}" fill="#3567a6"/>`,
    );
  }
  parts.push(close());
  const outside = band === undefined
    ? undefined
    : eigs.filter((v) => Math.abs(v) > band + 1e-9).length / Math.max(eigs.length, 1);
  return {
    svg: parts.join("\n"),
    summary: {
      points: eigs.length,
      ...(band !== undefined ? { band, outside_band_mass: outside } : {}),
    },
  };
}

/** Cumulative (1/2,1) eigenvalue counts vs n, one step line per epsilon. */
function renderCensus(table: Table, _overlays: Overlays): Figure {
  const epsValues = distinct(table, "eps");
  const ns = numbers(table, "n");
  const cums = numbers(table, "cumulative");
  const f = frame([min(ns) ?? 0, max(ns) ?? 1], [0, max(cums) ?? 1]);
  const parts = [open("second-gap census"), axes(f, "n", "cumulative count")];
  let nondecreasing = true;
  epsValues.forEach((eps, i) => {
    const pts: Array<[number, number]> = table.rows
      .filter((r) => r.eps === eps)
      .map((r) => [Number(r.n), Number(r.cumulative)]);
    for (let j = 1; j < pts.length; j++) {
      if (pts[j][1] < pts[j - 1][1]) nondecreasing = false;
    }
    parts.push(stepPath(f, pts, COLORS[i % COLORS.length]));
  });
  parts.push(legend(epsValues.map((e) => `eps=${e}`)), close());
  return {
    svg: parts.join("\n"),
    summary: { points: table.rows.length, series: epsValues.length, nondecreasing },
  };
}

/** ||mu^*n * P_delta||_2 against n with the fitted exponent noted. */
function renderFlatten(table: Table, overlays: Overlays): Figure {
  const ns = numbers(table, "n");
  const norms = numbers(table, "l2_norm");
  const f = frame([min(ns) ?? 0, max(ns) ?? 1], [0, max(norms) ?? 1]);
  const parts = [open("flattening curve"), axes(f, "n", "l2 norm")];
  const pts: Array<[number, number]> = table.rows
    .map((r) => [Number(r.n), Number(r.l2_norm)] as [number, number])
    .filter((p) => Number.isFinite(p[0]) && Number.isFinite(p[1]));
  parts.push(linePath(f, pts, COLORS[0]));
  for (const [a, b] of pts) {
    parts.push(`<circle cx="${px(f.x(a))}" cy="${px(f.y(b))}" r="2.5" fill="${COLORS[0]}"/>`);
  }
  const slope = num(overlays, "fitted_exponent");
  if (slope !== undefined) {
    parts.push(note(WIDTH - MARGIN.right - 150, MARGIN.top + 14, `fitted exponent ${label(slope)}`));
  }
  parts.push(close());
  return { svg: parts.join("\n"), summary: { points: pts.length } };
}

/** Escape-mass decay, one line per (subgroup, delta) family. */
function renderEscape(table: Table, _overlays: Overlays): Figure {
  const keys: string[] = [];
  const seen = new Set<string>();
  for (const r of table.rows) {
    const key = `${r.subgroup} d=${r.delta}`;
    if (!seen.has(key)) {
      seen.add(key);
      keys.push(key);
    }
  }
  const ns = numbers(table, "n");
  const masses = numbers(table, "mass");
  const f = frame([min(ns) ?? 0, max(ns) ?? 1], [0, max(masses) ?? 1]);
  const parts = [open("escape from subgroup neighborhoods"), axes(f, "n", "mass near H")];
  keys.forEach((key, i) => {
    const pts: Array<[number, number]> = table.rows
      .filter((r) => `${r.subgroup} d=${r.delta}` === key)
      .map((r) => [Number(r.n), Number(r.mass)]);
    parts.push(linePath(f, pts, COLORS[i % COLORS.length]));
  });
  parts.push(legend(keys), close());
  return {
    svg: parts.join("\n"),
    summary: { points: table.rows.length, series: keys.length },
  };
}

/** Histogram of walk eigenvalue moduli with the unit circle marked. */
function renderWalk(table: Table, _overlays: Overlays): Figure {
  const mods = numbers(table, "modulus");
  const hi = Math.max(1.05, (max(mods) ?? 1) + 0.05);
  const bins = histogram(mods, 0, hi, 0.025);
  const peak = max(bins, (b) => b.length) ?? 1;
  const f = frame([0, hi], [0, Math.max(peak, 1)]);
  const parts = [open("delayed walk spectrum"), axes(f, "|eigenvalue|", "count")];
  parts.push(vline(f, 1, "#c3543c"));
  for (const b of bins) {
    if (b.length === 0) continue;
    const y = f.y(b.length);
    parts.push(
      `<rect x="${px(f.x(b.x0))}" y="${px(y)}" width="${px(f.x(b.x1) - f.x(b.x0) - 0.5)}" height="${px(f.y(0) - y)}" fill="#3567a6"/>`,
    );
  }
  parts.push(close());
  return {
    svg: parts.join("\n"),
    summary: { points: mods.length, max_modulus: max(mods) ?? null },
  };
}

/** Expansion ratios per random trial against the 1 + kappa_hat floor. */
function renderExpand(table: Table, overlays: Overlays): Figure {
  const trials = numbers(table, "trial");
  const ratios = numbers(table, "ratio");
  const f = frame(
    [min(trials) ?? 0, max(trials) ?? 1],
    [Math.min(1, min(ratios) ?? 1), max(ratios) ?? 2],
  );
  const parts = [open("monotone expansion ratios"), axes(f, "trial", "image/set ratio")];
  parts.push(hline(f, 1, "#888888"));
  const kappa = num(overlays, "kappa_hat");
  if (kappa !== undefined) {
    parts.push(
      hline(f, 1 + kappa, "#c3543c"),
      note(MARGIN.left + 6, f.y(1 + kappa) - 5, `1 + kappa_hat = ${label(1 + kappa)}`, "#c3543c"),
    );
  }
  table.rows.forEach((r) => {
    const t = Number(r.trial);
    const v = Number(r.ratio);
    if (Number.isFinite(t) && Number.isFinite(v)) {
      parts.push(`<circle cx="${px(f.x(t))}" cy="${px(f.y(v))}" r="3" fill="${COLORS[0]}"/>`);
    }
  });
  parts.push(close());
  return {
    svg: parts.join("\n"),
    summary: { points: ratios.length, min_ratio: min(ratios) ?? null },
  };
}

/** kappa_hat per window as bars. */
function renderGap(table: Table, _overlays: Overlays): Figure {
  const kappas = numbers(table, "kappa_hat");
  const n = table.rows.length;
  const f = frame([-0.6, Math.max(n - 0.4, 0.6)], [0, max(kappas) ?? 1]);
  const parts = [open("local gap estimates"), axes(f, "window", "kappa_hat")];
  table.rows.forEach((r, i) => {
    const v = Number(r.kappa_hat);
    if (!Number.isFinite(v)) return;
    const x0 = f.x(i - 0.4);
    const x1 = f.x(i + 0.4);
    parts.push(
      `<rect x="${px(x0)}" y="${px(f.y(v))}" width="${px(x1 - x0)}" height="${px(f.y(0) - f.y(v))}" fill="${COLORS[0]}"/>`,
      note(x0, HEIGHT - MARGIN.bottom + 30, String(r.window ?? i).slice(0, 12)),
    );
  });
  parts.push(close());
  return { svg: parts.join("\n"), summary: { points: kappas.length } };
}

/** Scaled almost-orthogonality norms as a shaded (i, j) grid. */
function renderLp(table: Table, _overlays: Overlays): Figure {
  const is = numbers(table, "i");
  const js = numbers(table, "j");
  const scaled = numbers(table, "scaled_norm");
  const top = Math.max(max(scaled) ?? 1, 1e-12);
  const mI = (max(is) ?? 0) + 1;
  const mJ = (max(js) ?? 0) + 1;
  const f = frame([-0.5, mI - 0.5], [-0.5, mJ - 0.5]);
  const parts = [open("almost-orthogonality table"), axes(f, "i", "j")];
  table.rows.forEach((r) => {
    const i = Number(r.i);
    const j = Number(r.j);
    const v = Number(r.scaled_norm);
    if (![i, j, v].every(Number.isFinite)) return;
    const shade = Math.round(235 - 180 * (v / top));
    const x0 = f.x(i - 0.5);
    const y0 = f.y(j + 0.5);
    parts.push(
      `<rect x="${px(x0)}" y="${px(y0)}" width="${px(f.x(i + 0.5) - x0)}" height="${px(f.y(j - 0.5) - y0)}" fill="rgb(${shade},${shade},246)" stroke="#ffffff"/>`,
    );
    if (mI <= 8) {
      parts.push(note(f.x(i) - 12, f.y(j) + 4, Number(v.toPrecision(3)).toString(), "#222222"));
    }
  });
  parts.push(note(WIDTH - MARGIN.right - 150, MARGIN.top + 14, `max scaled ${label(top)}`), close());
  return {
    svg: parts.join("\n"),
    summary: { points: scaled.length, c0_hat: max(scaled) ?? null },
  };
}

/** Cells per dyadic level as bars. */
function renderDyadic(table: Table, _overlays: Overlays): Figure {
  const levels = numbers(table, "level");
  const counts = numbers(table, "cell_count");
  const f = frame(
    [(min(levels) ?? 0) - 0.6, (max(levels) ?? 1) + 0.6],
    [0, max(counts) ?? 1],
  );
  const parts = [open("dyadic level occupancy"), axes(f, "level", "cells")];
  table.rows.forEach((r) => {
    const l = Number(r.level);
    const c = Number(r.cell_count);
    if (!Number.isFinite(l) || !Number.isFinite(c)) return;
    const x0 = f.x(l - 0.4);
    parts.push(
      `<rect x="${px(x0)}" y="${px(f.y(c))}" width="${px(f.x(l + 0.4) - x0)}" height="${px(f.y(0) - f.y(c))}" fill="${COLORS[0]}"/>`,
    );
  });
  parts.push(close());
  return { svg: parts.join("\n"), summary: { points: counts.length } };
}

/** Mixing probe value and smoothing norm against delta. */
function renderMixing(table: Table, _overlays: Overlays): Figure {
  const deltas = numbers(table, "delta");
  const lhs = numbers(table, "lhs");
  const norms = numbers(table, "p_delta_norm");
  const yTop = Math.max(max(lhs) ?? 1, max(norms) ?? 1);
  const f = frame([min(deltas) ?? 0, max(deltas) ?? 1], [0, yTop]);
  const parts = [open("mixing probe"), axes(f, "delta", "value")];
  const lhsPts: Array<[number, number]> = table.rows.map((r) => [Number(r.delta), Number(r.lhs)]);
  const normPts: Array<[number, number]> = table.rows.map((r) => [Number(r.delta), Number(r.p_delta_norm)]);
  parts.push(linePath(f, lhsPts, COLORS[0]), linePath(f, normPts, COLORS[1]));
  parts.push(legend(["lhs ||f*F||^48", "||P_delta*F||"]), close());
  return { svg: parts.join("\n"), summary: { points: table.rows.length } };
}

/** Certification outcome card; there is no curve to draw. */
function renderPingpong(table: Table, _overlays: Overlays): Figure {
  const row = table.rows[0] ?? {};
  const parts = [open("ping-pong certification")];
  const lines = [
    `status: ${row.status ?? "unknown"}`,
    `margin: ${row.margin ?? "-"}`,
    `tangencies: ${row.tangencies ?? "-"}`,
    `detail: ${(row.detail ?? "").slice(0, 70)}`,
  ];
  lines.forEach((text, i) => {
    parts.push(note(MARGIN.left, MARGIN.top + 30 + 22 * i, text, "#222222"));
  });
  parts.push(close());
  return {
    svg: parts.join("\n"),
    summary: { status: row.status ?? null, points: table.rows.length },
  };
}

export const REQUIRED_COLUMNS: Record<string, readonly string[]> = {
  spectrum: ["n", "eig_index", "eigenvalue"],
  census: ["eps", "n", "count_in_half_one", "cumulative"],
  flatten: ["n", "delta", "l2_norm"],
  escape: ["n", "delta", "subgroup", "mass"],
  walk: ["eig_index", "real_part", "imag_part", "modulus"],
  expand: ["trial", "set_size", "image_measure", "ratio"],
  gap: ["experiment", "window", "delta_net", "kappa_hat"],
  lp: ["i", "j", "norm", "scaled_norm"],
  dyadic: ["level", "cell_count"],
  mixing: ["delta", "lhs", "p_delta_norm"],
  pingpong: ["status", "margin"],
};

export const RENDERERS: Record<string, Renderer> = {
  spectrum: renderSpectrum,
  census: renderCensus,
  flatten: renderFlatten,
  escape: renderEscape,
  walk: renderWalk,
  expand: renderExpand,
  gap: renderGap,
  lp: renderLp,
  dyadic: renderDyadic,
  mixing: renderMixing,
  pingpong: renderPingpong,
};
