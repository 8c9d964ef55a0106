/** The four standard figures, rendered from uhslab CSV outputs.
 *
 * Axes policy is fixed: ratio sweeps use a log s axis, stability and
 * convergence figures are log-log, heatmaps are linear. Rendering is pure:
 * identical inputs produce identical SVG strings.
 */

import * as path from "path";

import { column, readCsv, requireColumns, SchemaError, Table } from "./csv.js";
import {
  DEFAULT_FRAME,
  PALETTE,
  SvgBuilder,
  fmt,
  heatColor,
  linearScale,
  linearTicks,
  logScale,
  logTicks,
  positiveExtent,
} from "./svg.js";

export type FigureKind = "ratio-sweep" | "stability-loglog" | "recon-heatmap" | "convergence";

export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  output: string;
  title?: string;
}

export interface FigureResult {
  svg: string;
  /** numeric annotations baked into the figure, for machine checks */
  annotations: Record<string, number>;
}

export function renderFigure(spec: FigureSpec): FigureResult {
  if (spec.inputs.length === 0) {
    throw new SchemaError("no input CSV given");
  }
  switch (spec.kind) {
    case "ratio-sweep":
      return ratioSweep(spec);
    case "stability-loglog":
      return stabilityLogLog(spec);
    case "recon-heatmap":
      return reconHeatmap(spec);
    case "convergence":
      return convergence(spec);
    default:
      throw new SchemaError(`unknown figure kind: ${(spec as FigureSpec).kind}`);
  }
}

function baseName(p: string): string {
  return path.basename(p).replace(/\.csv$/i, "");
}

function ratioSweep(spec: FigureSpec): FigureResult {
  const tables: Array<{ label: string; table: Table }> = spec.inputs.map((p) => {
    const table = readCsv(p);
    requireColumns(table, ["s", "lhs", "rhs_interior", "rhs_boundary", "ratio"], p);
    return { label: baseName(p), table };
  });
  const allS = tables.flatMap(({ table }) => column(table, "s"));
  const allRatio = tables.flatMap(({ table }) => column(table, "ratio"));
  const svg = new SvgBuilder();
  const xs = logScale(positiveExtent(allS), [svg.innerLeft, svg.innerRight]);
  const yDomain = positiveExtent(allRatio);
  const ys = logScale(yDomain, [svg.innerBottom, svg.innerTop]);
  svg.title(spec.title ?? "weighted-energy ratio vs s");
  svg.axes(xs, ys, logTicks(positiveExtent(allS)), logTicks(yDomain), "s", "lhs / rhs");
  let maxRatio = 0;
  tables.forEach(({ label, table }, i) => {
    const s = column(table, "s");
    const ratio = column(table, "ratio");
    const pts: Array<[number, number]> = [];
    for (let k = 0; k < s.length; k++) {
      if (Number.isFinite(ratio[k]) && ratio[k] > 0) {
        pts.push([xs(s[k]), ys(ratio[k])]);
        maxRatio = Math.max(maxRatio, ratio[k]);
      }
    }
    const color = PALETTE[i % PALETTE.length];
    svg.polyline(pts, color);
    for (const [x, y] of pts) svg.circle(x, y, 3, color);
    svg.text(svg.innerRight - 8, svg.innerTop + 16 + 16 * i, label, {
      anchor: "end",
      fill: color,
      size: 12,
    });
  });
  svg.text(svg.innerLeft + 8, svg.innerTop + 16, `empirical C = ${fmt(maxRatio)}`, { size: 12 });
  return { svg: svg.render(), annotations: { empirical_C: maxRatio } };
}

function stabilityLogLog(spec: FigureSpec): FigureResult {
  const p = spec.inputs[0];
  const table = readCsv(p);
  requireColumns(table, ["amplitude", "d", "f_norm", "M", "theta_fit", "C_fit", "bound", "passed"], p);
  const d = column(table, "d");
  const f = column(table, "f_norm");
  const live = d.map((v, i) => [v, f[i]] as [number, number]).filter(([a, b]) => a > 0 && b > 0);
  const svg = new SvgBuilder();
  const xDom = positiveExtent(live.map(([a]) => a));
  const yDom = positiveExtent(live.map(([, b]) => b));
  const xs = logScale(xDom, [svg.innerLeft, svg.innerRight]);
  const ys = logScale(yDom, [svg.innerBottom, svg.innerTop]);
  svg.title(spec.title ?? "stability: source norm vs boundary data");
  svg.axes(xs, ys, logTicks(xDom), logTicks(yDom), "d", "|f|");
  for (const [a, b] of live) svg.circle(xs(a), ys(b), 4, PALETTE[0]);

  const annotations: Record<string, number> = {};
  if (live.length >= 3) {
    const theta = column(table, "theta_fit")[0];
    const cFit = column(table, "C_fit")[0];
    const pts: Array<[number, number]> = [];
    for (let k = 0; k <= 40; k++) {
      const dv = xDom[0] * (xDom[1] / xDom[0]) ** (k / 40);
      pts.push([xs(dv), ys(cFit * dv ** theta)]);
    }
    svg.polyline(pts, PALETTE[1], 1.2);
    svg.text(svg.innerLeft + 8, svg.innerTop + 16,
      `bound C d^theta: theta = ${fmt(theta)}, C = ${fmt(cFit)}`, { size: 12, fill: PALETTE[1] });
    annotations.theta_fit = theta;
    annotations.C_fit = cFit;
  } else {
    svg.text(svg.innerLeft + 8, svg.innerTop + 16,
      `warning: only ${live.length} points, fit overlay refused`, { size: 12, fill: "#b00" });
    annotations.fit_refused = 1;
  }
  return { svg: svg.render(), annotations };
}

function reconHeatmap(spec: FigureSpec): FigureResult {
  const p = spec.inputs[0];
  const table = readCsv(p);
  requireColumns(table, ["x", "y", "abs_error"], p);
  const xv = column(table, "x");
  const yv = column(table, "y");
  const ev = column(table, "abs_error");
  const xsu = [...new Set(xv)].sort((a, b) => a - b);
  const ysu = [...new Set(yv)].sort((a, b) => a - b);
  const maxErr = Math.max(...ev, 0);
  const svg = new SvgBuilder();
  const xs = linearScale([xsu[0], xsu[xsu.length - 1]], [svg.innerLeft, svg.innerRight]);
  const ys = linearScale([ysu[0], ysu[ysu.length - 1]], [svg.innerBottom, svg.innerTop]);
  svg.title(spec.title ?? "reconstruction error |f_rec - f|");
  const cw = (svg.innerRight - svg.innerLeft) / Math.max(1, xsu.length - 1);
  const ch = (svg.innerBottom - svg.innerTop) / Math.max(1, ysu.length - 1);
  for (let i = 0; i < xv.length; i++) {
    const t = maxErr > 0 ? ev[i] / maxErr : 0;
    svg.rect(xs(xv[i]) - cw / 2, ys(yv[i]) - ch / 2, cw, ch, heatColor(t));
  }
  svg.axes(xs, ys, linearTicks([xsu[0], xsu[xsu.length - 1]]),
    linearTicks([ysu[0], ysu[ysu.length - 1]]), "x", "y");
  svg.text(svg.innerRight - 8, svg.innerTop - 8, `max error = ${fmt(maxErr)}`, {
    anchor: "end",
    size: 12,
  });
  return { svg: svg.render(), annotations: { max_error: maxErr } };
}

/** Least-squares slope of log(error) against log(h). */
export function convergenceSlope(h: number[], err: number[]): number {
  const lx = h.map(Math.log);
  const ly = err.map(Math.log);
  const n = lx.length;
  const mx = lx.reduce((a, b) => a + b, 0) / n;
  const my = ly.reduce((a, b) => a + b, 0) / n;
  let num = 0;
  let den = 0;
  for (let i = 0; i < n; i++) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) ** 2;
  }
  return num / den;
}

function convergence(spec: FigureSpec): FigureResult {
  const p = spec.inputs[0];
  const table = readCsv(p);
  requireColumns(table, ["level", "h", "dt", "error"], p);
  const h = column(table, "h");
  const err = column(table, "error");
  if (h.length < 2) {
    throw new SchemaError(`${p}: need at least two refinement levels`);
  }
  const slope = convergenceSlope(h, err);
  const svg = new SvgBuilder();
  const xDom = positiveExtent(h);
  const yDom = positiveExtent(err);
  const xs = logScale(xDom, [svg.innerLeft, svg.innerRight]);
  const ys = logScale(yDom, [svg.innerBottom, svg.innerTop]);
  svg.title(spec.title ?? "manufactured-solution convergence");
  svg.axes(xs, ys, logTicks(xDom), logTicks(yDom), "h", "L2 error");
  const pts: Array<[number, number]> = h.map((hv, i) => [xs(hv), ys(err[i])]);
  svg.polyline(pts, PALETTE[0]);
  for (const [x, y] of pts) svg.circle(x, y, 4, PALETTE[0]);
  svg.text(svg.innerLeft + 8, svg.innerTop + 16, `slope = ${slope.toFixed(2)}`, { size: 13 });
  return { svg: svg.render(), annotations: { slope } };
}
