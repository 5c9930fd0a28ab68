/**
 * Figure builders. Three kinds, one per harness CSV shape:
 *
 *   trajectory   one line per input trajectory CSV, per-round error
 *   box-by-eps   trials CSV, one box per distinct eps value
 *   box-by-n     trials CSV, boxes grouped by network size and solver
 *
 * All y-axes are log-scale (the plotted quantities are squared errors).
 * Group counts are asserted before anything is drawn, failed trials are
 * excluded, and the output is a standalone SVG whose bytes depend only on
 * the input data.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import {
  TrajectoryPoint,
  TrialRow,
  parseTrajectoryCsv,
  parseTrialsCsv,
} from "./csv.js";
import { BoxStats, EmptyGroupError, boxStats } from "./stats.js";
import * as svg from "./svg.js";

export type FigureKind = "trajectory" | "box-by-eps" | "box-by-n";
export const FIGURE_KINDS: FigureKind[] = [
  "trajectory",
  "box-by-eps",
  "box-by-n",
];

export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  output: string;
}

export interface Figure {
  svg: string;
  /** polylines drawn (trajectory kind) */
  lines: number;
  /** boxes drawn (box kinds) */
  boxes: number;
}

export class ScaleError extends Error {}

const PALETTE = ["#4878d0", "#ee854a", "#6acc64", "#d65f5f", "#956cb4"];
const SOLVER_ORDER = ["gt", "dishuf-ac", "ac-baseline"];

const X0 = svg.MARGIN.left;
const X1 = svg.WIDTH - svg.MARGIN.right;
const Y_BOTTOM = svg.HEIGHT - svg.MARGIN.bottom;
const Y_TOP = svg.MARGIN.top;

function checkPositive(values: number[], what: string): void {
  for (const v of values) {
    if (!Number.isFinite(v) || v <= 0) {
      throw new ScaleError(
        `log-scale axis needs positive finite ${what}, got ${v}`,
      );
    }
  }
}

function frame(axis: svg.LogAxis, xLabel: string, yLabel: string): string[] {
  const parts: string[] = [];
  for (const t of axis.ticks) {
    const y = axis.y(t);
    parts.push(svg.line(X0, y, X1, y, "#ddd", "grid"));
    parts.push(svg.text(X0 - 6, y + 3.5, axis.label(t), "end", "ytick"));
  }
  parts.push(svg.line(X0, Y_BOTTOM, X1, Y_BOTTOM, "#333", "axis"));
  parts.push(svg.line(X0, Y_BOTTOM, X0, Y_TOP, "#333", "axis"));
  parts.push(
    svg.text((X0 + X1) / 2, svg.HEIGHT - 12, xLabel, "middle", "xlabel"),
  );
  parts.push(
    `<text class="ylabel" transform="translate(18,${svg.fmt((Y_BOTTOM + Y_TOP) / 2)}) rotate(-90)" text-anchor="middle" font-family="monospace" font-size="11" fill="#333">${svg.esc(yLabel)}</text>`,
  );
  return parts;
}

function drawBox(
  parts: string[],
  cx: number,
  halfW: number,
  st: BoxStats,
  axis: svg.LogAxis,
  fill: string,
): void {
  const yMin = axis.y(st.min);
  const yMax = axis.y(st.max);
  const yQ1 = axis.y(st.q1);
  const yQ3 = axis.y(st.q3);
  const yMed = axis.y(st.median);
  parts.push(svg.line(cx, yMin, cx, yMax, "#555", "whisker"));
  parts.push(svg.line(cx - halfW / 2, yMin, cx + halfW / 2, yMin, "#555", "cap"));
  parts.push(svg.line(cx - halfW / 2, yMax, cx + halfW / 2, yMax, "#555", "cap"));
  parts.push(
    svg.rect(cx - halfW, yQ3, 2 * halfW, yQ1 - yQ3, fill, "#333", "box"),
  );
  parts.push(svg.line(cx - halfW, yMed, cx + halfW, yMed, "#333", "median"));
}

export function buildTrajectory(
  series: Array<{ path: string; points: TrajectoryPoint[] }>,
): Figure {
  for (const s of series) {
    if (s.points.length < 2) {
      throw new EmptyGroupError(
        `trajectory ${s.path} has ${s.points.length} points, need at least 2`,
      );
    }
  }
  const values = series.flatMap((s) => s.points.map((p) => p.meanSqError));
  checkPositive(values, "mean_sq_error");
  const rounds = series.flatMap((s) => s.points.map((p) => p.round));
  const rMin = Math.min(...rounds);
  const rMax = Math.max(...rounds);
  const xPix = (r: number): number =>
    rMax === rMin ? (X0 + X1) / 2 : X0 + ((r - rMin) / (rMax - rMin)) * (X1 - X0);

  const axis = svg.makeLogAxis(
    Math.min(...values),
    Math.max(...values),
    Y_BOTTOM,
    Y_TOP,
  );
  const parts = frame(axis, "round", "mean_sq_error");

  const tickRounds = [...new Set(
    [0, 1, 2, 3, 4].map((i) => Math.round(rMin + (i / 4) * (rMax - rMin))),
  )];
  for (const r of tickRounds) {
    parts.push(svg.line(xPix(r), Y_BOTTOM, xPix(r), Y_BOTTOM + 4, "#333", "xtick"));
    parts.push(svg.text(xPix(r), Y_BOTTOM + 17, String(r), "middle", "xticklabel"));
  }

  series.forEach((s, i) => {
    const pts = s.points.map(
      (p): [number, number] => [xPix(p.round), axis.y(p.meanSqError)],
    );
    parts.push(svg.polyline(pts, PALETTE[i % PALETTE.length], "series"));
  });

  return { svg: svg.document(parts), lines: series.length, boxes: 0 };
}

function solverRank(s: string): [number, string] {
  const i = SOLVER_ORDER.indexOf(s);
  return [i === -1 ? SOLVER_ORDER.length : i, s];
}

export function buildBoxByEps(rows: TrialRow[]): Figure {
  if (rows.length === 0) throw new EmptyGroupError("no trial rows");
  const groups = new Map<string, { eps: number; values: number[] }>();
  for (const r of rows) {
    let g = groups.get(r.epsLabel);
    if (!g) {
      g = { eps: r.eps, values: [] };
      groups.set(r.epsLabel, g);
    }
    if (!r.failed) g.values.push(r.errorSq);
  }
  const labels = [...groups.keys()].sort(
    (a, b) => groups.get(a)!.eps - groups.get(b)!.eps,
  );
  for (const label of labels) {
    if (groups.get(label)!.values.length === 0) {
      throw new EmptyGroupError(`eps=${label}: every trial failed`);
    }
  }
  const values = labels.flatMap((l) => groups.get(l)!.values);
  checkPositive(values, "error_sq");

  const axis = svg.makeLogAxis(
    Math.min(...values),
    Math.max(...values),
    Y_BOTTOM,
    Y_TOP,
  );
  const parts = frame(axis, "eps", "error_sq");

  const slot = (X1 - X0) / labels.length;
  const halfW = Math.min(0.3 * slot, 40);
  labels.forEach((label, i) => {
    const cx = X0 + (i + 0.5) * slot;
    drawBox(parts, cx, halfW, boxStats(groups.get(label)!.values), axis, PALETTE[0]);
    parts.push(svg.text(cx, Y_BOTTOM + 17, label, "middle", "xticklabel"));
  });

  return { svg: svg.document(parts), lines: 0, boxes: labels.length };
}

export function buildBoxByN(rows: TrialRow[]): Figure {
  if (rows.length === 0) throw new EmptyGroupError("no trial rows");
  const sizes = [...new Set(rows.map((r) => r.n))].sort((a, b) => a - b);
  const solvers = [...new Set(rows.map((r) => r.solver))].sort((a, b) => {
    const [ra, na] = solverRank(a);
    const [rb, nb] = solverRank(b);
    return ra - rb || na.localeCompare(nb);
  });

  const cell = new Map<string, number[]>();
  for (const n of sizes) {
    for (const s of solvers) cell.set(`${s}@${n}`, []);
  }
  for (const r of rows) {
    if (!r.failed) cell.get(`${r.solver}@${r.n}`)!.push(r.errorSq);
  }
  for (const n of sizes) {
    for (const s of solvers) {
      if (cell.get(`${s}@${n}`)!.length === 0) {
        throw new EmptyGroupError(`empty group: solver=${s} n=${n}`);
      }
    }
  }
  const values = [...cell.values()].flat();
  checkPositive(values, "error_sq");

  const axis = svg.makeLogAxis(
    Math.min(...values),
    Math.max(...values),
    Y_BOTTOM,
    Y_TOP,
  );
  const parts = frame(axis, "n", "error_sq");

  const major = (X1 - X0) / sizes.length;
  const minor = major / solvers.length;
  const halfW = Math.min(0.32 * minor, 28);
  sizes.forEach((n, i) => {
    const left = X0 + i * major;
    solvers.forEach((s, j) => {
      const cx = left + (j + 0.5) * minor;
      drawBox(
        parts,
        cx,
        halfW,
        boxStats(cell.get(`${s}@${n}`)!),
        axis,
        PALETTE[j % PALETTE.length],
      );
    });
    parts.push(
      svg.text(left + major / 2, Y_BOTTOM + 17, String(n), "middle", "xticklabel"),
    );
  });

  solvers.forEach((s, j) => {
    const lx = X1 - 130;
    const ly = Y_TOP + 8 + j * 16;
    parts.push(svg.rect(lx, ly, 10, 10, PALETTE[j % PALETTE.length], "#333", "legend"));
    parts.push(svg.text(lx + 16, ly + 9, s, "start", "legendlabel"));
  });

  return {
    svg: svg.document(parts),
    lines: 0,
    boxes: sizes.length * solvers.length,
  };
}

/** Read the FigureSpec's inputs, build the figure, write the SVG, return counts. */
export function renderFigure(spec: FigureSpec): Figure {
  if (!FIGURE_KINDS.includes(spec.kind)) {
    throw new Error(
      `unknown figure kind "${spec.kind}" (expected ${FIGURE_KINDS.join(" | ")})`,
    );
  }
  if (spec.inputs.length === 0) {
    throw new Error("at least one input CSV is required");
  }
  const texts = spec.inputs.map((p) => ({
    path: p,
    text: fs.readFileSync(p, "utf8"),
  }));

  let fig: Figure;
  if (spec.kind === "trajectory") {
    const series = texts.map((t) => ({
      path: t.path,
      points: parseTrajectoryCsv(t.text, t.path),
    }));
    fig = buildTrajectory(series);
  } else {
    const rows = texts.flatMap((t) => parseTrialsCsv(t.text, t.path));
    fig = spec.kind === "box-by-eps" ? buildBoxByEps(rows) : buildBoxByN(rows);
  }

  const outDir = path.dirname(spec.output);
  if (!fs.existsSync(outDir)) {
    throw new Error(`output directory does not exist: ${outDir}`);
  }
  fs.writeFileSync(spec.output, fig.svg);
  return fig;
}
