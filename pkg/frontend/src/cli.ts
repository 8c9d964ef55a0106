#!/usr/bin/env node
/** uhslab-figs --kind <k> --in <csv> [--in <csv> ...] --out <img> [--title t]
 *
 * Kinds: ratio-sweep | stability-loglog | recon-heatmap | convergence.
 * Output is SVG; pass a path ending in .svg.
 */

import * as fs from "fs";
import * as path from "path";
import { parseArgs } from "util";

import { SchemaError } from "./csv.js";
import { FigureKind, renderFigure } from "./figures.js";

const KINDS: FigureKind[] = ["ratio-sweep", "stability-loglog", "recon-heatmap", "convergence"];

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        kind: { type: "string" },
        in: { type: "string", multiple: true },
        out: { type: "string" },
        title: { type: "string" },
      },
    });
  } catch (err) {
    console.error(`uhslab-figs: ${(err as Error).message}`);
    return 2;
  }
  const { kind, in: inputs, out, title } = parsed.values;
  if (!kind || !KINDS.includes(kind as FigureKind)) {
    console.error(`uhslab-figs: --kind must be one of ${KINDS.join(", ")}`);
    return 2;
  }
  if (!inputs || inputs.length === 0 || !out) {
    console.error("uhslab-figs: --in <csv> and --out <img> are required");
    return 2;
  }
  if (path.extname(out).toLowerCase() !== ".svg") {
    console.error("uhslab-figs: output format is SVG; pass a .svg path");
    return 2;
  }
  try {
    const result = renderFigure({
      kind: kind as FigureKind,
      inputs,
      output: out,
      title,
    });
    fs.mkdirSync(path.dirname(path.resolve(out)), { recursive: true });
    fs.writeFileSync(out, result.svg + "\n");
    console.log(JSON.stringify({ out, annotations: result.annotations }));
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`uhslab-figs: ${err.message}`);
      return 2;
    }
    console.error(`uhslab-figs: ${(err as Error).message}`);
    return 1;
  }
}

const isDirect = process.argv[1] !== undefined
  && path.resolve(process.argv[1]) === new URL(import.meta.url).pathname;
if (isDirect) {
  process.exit(main(process.argv.slice(2)));
}
