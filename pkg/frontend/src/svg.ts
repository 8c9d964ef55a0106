/** Deterministic SVG assembly: scales, axes, marks. No DOM, no randomness. */

export interface Frame {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
}

export const DEFAULT_FRAME: Frame = {
  width: 720,
  height: 480,
  margin: { top: 48, right: 24, bottom: 56, left: 72 },
};

export type Scale = (v: number) => number;

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  return (v) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const lo = Math.log10(domain[0]);
  const hi = Math.log10(domain[1]);
  const lin = linearScale([lo, hi], range);
  return (v) => lin(Math.log10(v));
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (!Number.isFinite(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!(lo < hi)) {
    hi = lo === Infinity ? 1 : lo + 1;
    lo = lo === Infinity ? 0 : lo - 1;
  }
  return [lo, hi];
}

export function positiveExtent(values: number[]): [number, number] {
  const pos = values.filter((v) => Number.isFinite(v) && v > 0);
  if (pos.length === 0) return [0.1, 10];
  const [lo, hi] = extent(pos);
  return lo === hi ? [lo / 2, hi * 2] : [lo, hi];
}

export function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.01 && a < 10000) {
    return String(Number(v.toPrecision(4)));
  }
  return v.toExponential(2);
}

export function escapeText(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2",
];

export function logTicks(domain: [number, number]): number[] {
  const lo = Math.ceil(Math.log10(domain[0]) - 1e-9);
  const hi = Math.floor(Math.log10(domain[1]) + 1e-9);
  const out: number[] = [];
  for (let e = lo; e <= hi; e++) out.push(10 ** e);
  if (out.length === 0) out.push(domain[0], domain[1]);
  return out;
}

export function linearTicks(domain: [number, number], count = 5): number[] {
  const span = domain[1] - domain[0];
  if (span <= 0) return [domain[0]];
  const step = 10 ** Math.floor(Math.log10(span / count));
  const candidates = [step, 2 * step, 5 * step, 10 * step];
  const chosen = candidates.find((s) => span / s <= count + 1) ?? 10 * step;
  const out: number[] = [];
  for (let v = Math.ceil(domain[0] / chosen) * chosen; v <= domain[1] + 1e-12 * span; v += chosen) {
    out.push(Number(v.toPrecision(12)));
  }
  return out;
}

export class SvgBuilder {
  private parts: string[] = [];
  constructor(public frame: Frame = DEFAULT_FRAME) {}

  get innerLeft(): number {
    return this.frame.margin.left;
  }
  get innerRight(): number {
    return this.frame.width - this.frame.margin.right;
  }
  get innerTop(): number {
    return this.frame.margin.top;
  }
  get innerBottom(): number {
    return this.frame.height - this.frame.margin.bottom;
  }

  add(s: string): void {
    this.parts.push(s);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke = "#222", width = 1, dash = ""): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.add(`<line x1="${r(x1)}" y1="${r(y1)}" x2="${r(x2)}" y2="${r(y2)}" stroke="${stroke}" stroke-width="${width}"${d}/>`);
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1.5): void {
    const pts = points.map(([x, y]) => `${r(x)},${r(y)}`).join(" ");
    this.add(`<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`);
  }

  circle(x: number, y: number, radius: number, fill: string): void {
    this.add(`<circle cx="${r(x)}" cy="${r(y)}" r="${radius}" fill="${fill}"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.add(`<rect x="${r(x)}" y="${r(y)}" width="${r(w)}" height="${r(h)}" fill="${fill}"/>`);
  }

  text(x: number, y: number, s: string, opts: { anchor?: string; size?: number; fill?: string; rotate?: number } = {}): void {
    const anchor = opts.anchor ?? "start";
    const size = opts.size ?? 13;
    const fill = opts.fill ?? "#222";
    const rot = opts.rotate ? ` transform="rotate(${opts.rotate} ${r(x)} ${r(y)})"` : "";
    this.add(`<text x="${r(x)}" y="${r(y)}" text-anchor="${anchor}" font-size="${size}" font-family="sans-serif" fill="${fill}"${rot}>${escapeText(s)}</text>`);
  }

  axes(xs: Scale, ys: Scale, xTicks: number[], yTicks: number[], xLabel: string, yLabel: string): void {
    const b = this.innerBottom;
    const l = this.innerLeft;
    this.line(l, b, this.innerRight, b);
    this.line(l, this.innerTop, l, b);
    for (const t of xTicks) {
      const x = xs(t);
      this.line(x, b, x, b + 5);
      this.text(x, b + 20, fmt(t), { anchor: "middle", size: 11 });
    }
    for (const t of yTicks) {
      const y = ys(t);
      this.line(l - 5, y, l, y);
      this.text(l - 8, y + 4, fmt(t), { anchor: "end", size: 11 });
    }
    this.text((l + this.innerRight) / 2, this.frame.height - 12, xLabel, { anchor: "middle" });
    this.text(16, (this.innerTop + b) / 2, yLabel, { anchor: "middle", rotate: -90 });
  }

  title(s: string): void {
    this.text(this.frame.width / 2, 24, s, { anchor: "middle", size: 16 });
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.frame.width}" height="${this.frame.height}" viewBox="0 0 ${this.frame.width} ${this.frame.height}">`,
      `<rect width="${this.frame.width}" height="${this.frame.height}" fill="white"/>`,
      ...this.parts,
      "</svg>",
    ].join("\n");
  }
}

function r(v: number): string {
  return String(Math.round(v * 100) / 100);
}

/** Three-stop color ramp for heatmaps (low -> mid -> high). */
export function heatColor(t: number): string {
  const stops: Array<[number, number, number]> = [
    [26, 42, 108],
    [43, 176, 127],
    [245, 230, 66],
  ];
  const clamped = Math.max(0, Math.min(1, t));
  const pos = clamped * (stops.length - 1);
  const i = Math.min(stops.length - 2, Math.floor(pos));
  const f = pos - i;
  const mix = stops[i].map((c, k) => Math.round(c + f * (stops[i + 1][k] - c)));
  return `rgb(${mix[0]},${mix[1]},${mix[2]})`;
}
