#!/usr/bin/env node
/**
 * CLI entry point:
 *
 *   dpls-plots render <kind> <csv...> -o <out.svg>
 *
 * where <kind> is trajectory, box-by-eps, or box-by-n.
 */

import { pathToFileURL } from "node:url";

import { FIGURE_KINDS, FigureKind, renderFigure } from "./render.js";

const USAGE = `usage: dpls-plots render <kind> <csv...> -o <out.svg>
  kinds: ${FIGURE_KINDS.join(", ")}`;

export function main(argv: string[]): number {
  if (argv[0] !== "render" || argv.length < 2) {
    process.stderr.write(USAGE + "\n");
    return argv[0] === "--help" || argv[0] === "-h" ? 0 : 2;
  }
  const kind = argv[1] as FigureKind;
  const inputs: string[] = [];
  let output: string | null = null;
  for (let i = 2; i < argv.length; i++) {
    if (argv[i] === "-o" || argv[i] === "--out") {
      output = argv[i + 1] ?? null;
      i++;
    } else {
      inputs.push(argv[i]);
    }
  }
  if (output === null) {
    process.stderr.write("error: missing -o <out.svg>\n" + USAGE + "\n");
    return 2;
  }
  try {
    const fig = renderFigure({ kind, inputs, output });
    const what =
      fig.boxes > 0
        ? `${fig.boxes} boxes`
        : `${fig.lines} line${fig.lines === 1 ? "" : "s"}`;
    process.stdout.write(`wrote ${output} (${what})\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

if (
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href
) {
  process.exit(main(process.argv.slice(2)));
}
