import { describe, expect, it } from "vitest";

import type { Table } from "../src/csv.js";
import { RENDERERS } from "../src/figures.js";
import { emptyAxes } from "../src/svg.js";

function table(columns: string[], data: Array<Array<string | number>>): Table {
  return {
    path: "synthetic.csv",
    columns,
    rows: data.map((row) =>
      Object.fromEntries(row.map((v, i) => [columns[i], String(v)])),
    ),
  };
}

describe("spectrum histogram", () => {
  const columns = ["n", "eig_index", "eigenvalue"];
  const inside = table(columns, [
    [1, 0, 0.74], [1, 1, -0.5], [2, 0, 0.0], [2, 1, 0.3], [2, 2, -0.745],
  ]);

  it("reports zero mass outside the Kesten band when all eigenvalues fit", () => {
    const fig = RENDERERS.spectrum(inside, { k: 3 });
    expect(fig.summary.outside_band_mass).toBe(0);
    expect(fig.summary.band).toBeCloseTo(Math.sqrt(5) / 3, 12);
    expect(fig.svg).toContain("Kesten band");
    expect(fig.svg).toContain("</svg>");
  });

  it("counts exceptional eigenvalues as outside mass", () => {
    const rows = table(columns, [[1, 0, 0.9], [1, 1, 0.1], [2, 0, -0.2], [2, 1, 0.0]]);
    const fig = RENDERERS.spectrum(rows, { k: 3 });
    expect(fig.summary.outside_band_mass).toBeCloseTo(0.25, 12);
  });

  it("omits the band when no k overlay is given", () => {
    const fig = RENDERERS.spectrum(inside, {});
    expect(fig.summary.band).toBeUndefined();
    expect(fig.svg).not.toContain("Kesten band");
  });
});

describe("census steps", () => {
  const columns = ["eps", "n", "count_in_half_one", "cumulative"];

  it("draws one nondecreasing step series per epsilon", () => {
    const fig = RENDERERS.census(
      table(columns, [
        [0.2, 1, 0, 0], [0.2, 2, 2, 2], [0.2, 3, 1, 3],
        [0.1, 1, 1, 1], [0.1, 2, 0, 1], [0.1, 3, 4, 5],
      ]),
      {},
    );
    expect(fig.summary.series).toBe(2);
    expect(fig.summary.nondecreasing).toBe(true);
  });

  it("flags a decreasing cumulative column", () => {
    const fig = RENDERERS.census(
      table(columns, [[0.2, 1, 0, 3], [0.2, 2, 0, 1]]),
      {},
    );
    expect(fig.summary.nondecreasing).toBe(false);
  });
});

describe("other default figures", () => {
  it("walk histogram reports the top modulus", () => {
    const fig = RENDERERS.walk(
      table(["eig_index", "real_part", "imag_part", "modulus"], [
        [0, 1, 0, 1], [1, -0.4, 0.1, 0.412],
      ]),
      {},
    );
    expect(fig.summary.max_modulus).toBe(1);
    expect(fig.svg).toContain("</svg>");
  });

  it("expand scatter records the worst ratio and the kappa line", () => {
    const fig = RENDERERS.expand(
      table(["trial", "set_size", "image_measure", "ratio"], [
        [0, 10, 0.5, 1.7], [1, 4, 0.3, 1.71],
      ]),
      { kappa_hat: 0.7 },
    );
    expect(fig.summary.min_ratio).toBeCloseTo(1.7, 12);
    expect(fig.svg).toContain("kappa_hat");
  });

  it("flatten notes the fitted exponent overlay", () => {
    const fig = RENDERERS.flatten(
      table(["n", "delta", "l2_norm"], [[0, 0.1, 9.0], [1, 0.1, 5.0], [2, 0.1, 3.1]]),
      { fitted_exponent: -0.557 },
    );
    expect(fig.svg).toContain("fitted exponent");
    expect(fig.summary.points).toBe(3);
  });

  it("escape draws one series per subgroup-delta pair", () => {
    const fig = RENDERERS.escape(
      table(["n", "delta", "subgroup", "mass", "fitted_exponent"], [
        [1, 0.05, "rotation", 0.25, ""], [2, 0.05, "rotation", 0.11, ""],
        [1, 0.05, "diagonal", 0.2, ""], [2, 0.05, "diagonal", 0.1, "0.78"],
      ]),
      {},
    );
    expect(fig.summary.series).toBe(2);
  });

  it("remaining kinds render closed SVG documents", () => {
    const cases: Array<[string, Table]> = [
      ["gap", table(["experiment", "window", "delta_net", "kappa_hat", "dim_v", "residual"],
                    [["gap", "ball(0.06)", 0.04, 1.47, 1, 0.01]])],
      ["lp", table(["i", "j", "norm", "scaled_norm"],
                   [[0, 0, 0.9, 0.9], [0, 1, 0.2, 0.4], [1, 0, 0.2, 0.4], [1, 1, 0.8, 0.8]])],
      ["dyadic", table(["level", "cell_count"], [[0, 12], [1, 40], [2, 9]])],
      ["mixing", table(["delta", "lhs", "p_delta_norm"], [[0.07, 0.2, 0.5], [0.09, 0.3, 0.6]])],
      ["pingpong", table(["status", "margin", "tangencies", "detail"],
                         [["certified", 0.785, 0, "margin 0.785"]])],
    ];
    for (const [kind, data] of cases) {
      const fig = RENDERERS[kind](data, {});
      expect(fig.svg.startsWith("<svg"), kind).toBe(true);
      expect(fig.svg.endsWith("</svg>"), kind).toBe(true);
    }
  });

  it("empty axes placeholder is a complete document", () => {
    const svg = emptyAxes("anything", "x", "y");
    expect(svg).toContain("(no data)");
    expect(svg).toContain("</svg>");
  });
});
