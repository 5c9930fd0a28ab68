/**
 * Parsers for the two CSV shapes the dpls harness writes.
 *
 * Both files start with a `# schema: <name>/<version>` line followed by a
 * fixed header. Floats are written with Python's repr(), so failed trials
 * carry literal `nan` cells; those rows are kept (callers filter on the
 * `failed` flag) but everything else must parse as a finite number.
 */

export const TRIALS_SCHEMA = "trials/1";
export const TRAJECTORY_SCHEMA = "trajectory/1";

export const TRIALS_HEADER =
  "trial,solver,n,m,eps,delta,mu,error_sq,mean_agent_error_sq,iters,failed";
export const TRAJECTORY_HEADER = "round,mean_sq_error";

export class CsvError extends Error {}

export interface TrialRow {
  trial: number;
  solver: string;
  n: number;
  m: number;
  eps: number;
  /** eps exactly as written in the file, used for group labels */
  epsLabel: string;
  delta: number;
  mu: number;
  errorSq: number;
  meanAgentErrorSq: number;
  iters: number;
  failed: boolean;
}

export interface TrajectoryPoint {
  round: number;
  meanSqError: number;
}

/** Schema name from the first line, or null if the line is not a schema line. */
export function readSchema(text: string): string | null {
  const first = text.split("\n", 1)[0] ?? "";
  const m = first.match(/^# schema: (\S+)\s*$/);
  return m ? m[1] : null;
}

function splitRows(
  text: string,
  path: string,
  schema: string,
  header: string,
): string[][] {
  const found = readSchema(text);
  if (found !== schema) {
    throw new CsvError(
      `schema mismatch in ${path}: expected "${schema}", got "${found ?? "no schema line"}"`,
    );
  }
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines[1] !== header) {
    throw new CsvError(`unexpected header in ${path}: "${lines[1] ?? ""}"`);
  }
  const want = header.split(",").length;
  const rows: string[][] = [];
  for (let i = 2; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== want) {
      throw new CsvError(
        `row ${i + 1} of ${path} has ${cells.length} cells, expected ${want}`,
      );
    }
    rows.push(cells);
  }
  return rows;
}

/** Parse one numeric cell; `nan`/`inf` are valid only when lenient. */
function num(
  cell: string,
  col: string,
  path: string,
  lenient = false,
): number {
  let v: number;
  if (cell === "nan") v = NaN;
  else if (cell === "inf") v = Infinity;
  else if (cell === "-inf") v = -Infinity;
  else v = Number(cell);
  if (!lenient && !Number.isFinite(v)) {
    throw new CsvError(`bad ${col} value "${cell}" in ${path}`);
  }
  return v;
}

export function parseTrialsCsv(text: string, path: string): TrialRow[] {
  const rows = splitRows(text, path, TRIALS_SCHEMA, TRIALS_HEADER);
  return rows.map((c) => {
    const failed = c[10] === "1";
    return {
      trial: num(c[0], "trial", path),
      solver: c[1],
      n: num(c[2], "n", path),
      m: num(c[3], "m", path),
      eps: num(c[4], "eps", path),
      epsLabel: c[4],
      delta: num(c[5], "delta", path),
      mu: num(c[6], "mu", path),
      errorSq: num(c[7], "error_sq", path, failed),
      meanAgentErrorSq: num(c[8], "mean_agent_error_sq", path, failed),
      iters: num(c[9], "iters", path),
      failed,
    };
  });
}

export function parseTrajectoryCsv(
  text: string,
  path: string,
): TrajectoryPoint[] {
  const rows = splitRows(text, path, TRAJECTORY_SCHEMA, TRAJECTORY_HEADER);
  return rows.map((c) => ({
    round: num(c[0], "round", path),
    meanSqError: num(c[1], "mean_sq_error", path),
  }));
}
