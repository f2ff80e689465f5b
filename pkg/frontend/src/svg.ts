import { scaleLinear, type ScaleLinear } from "d3-scale";

/**
 * Fixed-geometry SVG assembly.  Every figure uses the same canvas, margins,
 * fonts, and number formatting so that rerendering a spec is byte-stable.
 */

export const WIDTH = 640;
export const HEIGHT = 420;
export const MARGIN = { top: 28, right: 22, bottom: 46, left: 62 } as const;

export const INNER_W = WIDTH - MARGIN.left - MARGIN.right;
export const INNER_H = HEIGHT - MARGIN.top - MARGIN.bottom;

export const COLORS = [
  "#3567a6", "#c3543c", "#4a8a56", "#8457a0", "#ad8a2e", "#58a0a8",
] as const;

/** Coordinates at fixed 2-decimal precision; avoids "-0.00". */
export function px(v: number): string {
  const r = Math.round(v * 100) / 100;
  return (Object.is(r, -0) ? 0 : r).toString();
}

/** Tick and annotation labels: up to 6 significant digits, locale-free. */
export function label(v: number): string {
  if (v === 0) return "0";
  const s = Number(v.toPrecision(6)).toString();
  return s.replace("e+", "e");
}

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface Frame {
  x: ScaleLinear<number, number>;
  y: ScaleLinear<number, number>;
  parts: string[];
}

/** Linear frame over the data extents with padded, niced domains. */
export function frame(
  xDomain: [number, number], yDomain: [number, number],
): Frame {
  const x = scaleLinear().domain(xDomain).nice()
    .range([MARGIN.left, WIDTH - MARGIN.right]);
  const y = scaleLinear().domain(yDomain).nice()
    .range([HEIGHT - MARGIN.bottom, MARGIN.top]);
  return { x, y, parts: [] };
}

export function open(title: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif" font-size="11">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`,
    `<text x="${MARGIN.left}" y="18" font-size="13" fill="#222222">${esc(title)}</text>`,
  ].join("\n");
}

export function close(): string {
  return "</svg>";
}

export function axes(f: Frame, xLabel: string, yLabel: string): string {
  const out: string[] = [];
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  out.push(`<g stroke="#444444" stroke-width="1" fill="none">`);
  out.push(`<path d="M${px(x0)},${px(y1)}V${px(y0)}H${px(x1)}"/>`);
  out.push(`</g>`);
  out.push(`<g fill="#333333">`);
  for (const t of f.x.ticks(7)) {
    const xx = f.x(t);
    out.push(`<line x1="${px(xx)}" y1="${px(y0)}" x2="${px(xx)}" y2="${px(y0 + 5)}" stroke="#444444"/>`);
    out.push(`<text x="${px(xx)}" y="${px(y0 + 18)}" text-anchor="middle">${label(t)}</text>`);
  }
  for (const t of f.y.ticks(6)) {
    const yy = f.y(t);
    out.push(`<line x1="${px(x0 - 5)}" y1="${px(yy)}" x2="${px(x0)}" y2="${px(yy)}" stroke="#444444"/>`);
    out.push(`<text x="${px(x0 - 8)}" y="${px(yy + 3.5)}" text-anchor="end">${label(t)}</text>`);
    out.push(`<line x1="${px(x0)}" y1="${px(yy)}" x2="${px(x1)}" y2="${px(yy)}" stroke="#eeeeee"/>`);
  }
  out.push(`<text x="${px((x0 + x1) / 2)}" y="${px(HEIGHT - 10)}" text-anchor="middle">${esc(xLabel)}</text>`);
  out.push(`<text x="14" y="${px((y0 + y1) / 2)}" text-anchor="middle" transform="rotate(-90 14 ${px((y0 + y1) / 2)})">${esc(yLabel)}</text>`);
  out.push(`</g>`);
  return out.join("\n");
}

/** Polyline through data points mapped by the frame scales. */
export function linePath(
  f: Frame, pts: Array<[number, number]>, stroke: string, extra = "",
): string {
  if (pts.length === 0) return "";
  const d = pts
    .map(([a, b], i) => `${i === 0 ? "M" : "L"}${px(f.x(a))},${px(f.y(b))}`)
    .join("");
  return `<path d="${d}" fill="none" stroke="${stroke}" stroke-width="1.5"${extra}/>`;
}

/** Step path (horizontal-then-vertical), the shape of cumulative counts. */
export function stepPath(
  f: Frame, pts: Array<[number, number]>, stroke: string,
): string {
  if (pts.length === 0) return "";
  let d = `M${px(f.x(pts[0][0]))},${px(f.y(pts[0][1]))}`;
  for (let i = 1; i < pts.length; i++) {
    d += `H${px(f.x(pts[i][0]))}V${px(f.y(pts[i][1]))}`;
  }
  return `<path d="${d}" fill="none" stroke="${stroke}" stroke-width="1.5"/>`;
}

export function vline(f: Frame, x: number, stroke: string, dash = "4,3"): string {
  return `<line x1="${px(f.x(x))}" y1="${px(MARGIN.top)}" x2="${px(f.x(x))}" y2="${px(HEIGHT - MARGIN.bottom)}" stroke="${stroke}" stroke-width="1.2" stroke-dasharray="${dash}"/>`;
}

export function hline(f: Frame, y: number, stroke: string, dash = "4,3"): string {
  return `<line x1="${px(MARGIN.left)}" y1="${px(f.y(y))}" x2="${px(WIDTH - MARGIN.right)}" y2="${px(f.y(y))}" stroke="${stroke}" stroke-width="1.2" stroke-dasharray="${dash}"/>`;
}

export function note(x: number, y: number, text: string, fill = "#555555"): string {
  return `<text x="${px(x)}" y="${px(y)}" fill="${fill}">${esc(text)}</text>`;
}

/** Figure with the standard frame but no data marks. */
export function emptyAxes(title: string, xLabel: string, yLabel: string): string {
  const f = frame([0, 1], [0, 1]);
  return [
    open(title),
    axes(f, xLabel, yLabel),
    note(WIDTH / 2 - 30, HEIGHT / 2, "(no data)"),
    close(),
  ].join("\n");
}
