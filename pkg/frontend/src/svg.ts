/**
 * Tiny deterministic SVG builder. Coordinates are formatted with a fixed
 * number of decimals so identical data always produces identical bytes; no
 * timestamps, ids, or external references appear anywhere in the output.
 */

export const WIDTH = 640;
export const HEIGHT = 420;
export const MARGIN = { top: 20, right: 24, bottom: 48, left: 76 };

export function fmt(v: number): string {
  return v.toFixed(2);
}

export function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function line(
  x1: number,
  y1: number,
  x2: number,
  y2: number,
  stroke: string,
  cls = "",
): string {
  const c = cls ? ` class="${cls}"` : "";
  return `<line${c} x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${stroke}" stroke-width="1"/>`;
}

export function rect(
  x: number,
  y: number,
  w: number,
  h: number,
  fill: string,
  stroke: string,
  cls = "",
): string {
  const c = cls ? ` class="${cls}"` : "";
  return `<rect${c} x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}" stroke="${stroke}" stroke-width="1"/>`;
}

export function polyline(
  points: Array<[number, number]>,
  stroke: string,
  cls = "",
): string {
  const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  const c = cls ? ` class="${cls}"` : "";
  return `<polyline${c} points="${pts}" fill="none" stroke="${stroke}" stroke-width="1.5"/>`;
}

export function text(
  x: number,
  y: number,
  s: string,
  anchor: "start" | "middle" | "end" = "middle",
  cls = "",
): string {
  const c = cls ? ` class="${cls}"` : "";
  return `<text${c} x="${fmt(x)}" y="${fmt(y)}" text-anchor="${anchor}" font-family="monospace" font-size="11" fill="#333">${esc(s)}</text>`;
}

export function document(body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
    `<rect x="0" y="0" width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    ...body,
    "</svg>",
  ].join("\n");
}

export interface LogAxis {
  /** pixel y for a positive data value */
  y(v: number): number;
  /** tick positions as data values */
  ticks: number[];
  label(v: number): string;
}

/**
 * Log10 y-axis over [lo, hi] mapped to pixel rows [yBottom, yTop]. Ticks sit
 * on decade boundaries; if the data spans less than one decade the two domain
 * endpoints are used instead.
 */
export function makeLogAxis(
  lo: number,
  hi: number,
  yBottom: number,
  yTop: number,
): LogAxis {
  let a = Math.log10(lo);
  let b = Math.log10(hi);
  if (a === b) {
    a -= 0.5;
    b += 0.5;
  }
  const pad = 0.04 * (b - a);
  a -= pad;
  b += pad;
  const y = (v: number): number =>
    yBottom + ((Math.log10(v) - a) / (b - a)) * (yTop - yBottom);
  const ticks: number[] = [];
  for (let k = Math.ceil(a); k <= Math.floor(b); k++) ticks.push(10 ** k);
  const decade = ticks.length >= 2;
  if (!decade) {
    ticks.length = 0;
    ticks.push(10 ** a, 10 ** b);
  }
  const label = (v: number): string =>
    decade ? `1e${Math.round(Math.log10(v))}` : v.toExponential(1);
  return { y, ticks, label };
}
