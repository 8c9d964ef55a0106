import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { describe, expect, it } from "vitest";

import { SchemaError, readCsv, requireColumns } from "../src/csv.js";
import { convergenceSlope, renderFigure } from "../src/figures.js";
import { main } from "../src/cli.js";

const GOLDEN = path.join(__dirname, "..", "golden");

function tmpFile(name: string): string {
  return path.join(fs.mkdtempSync(path.join(os.tmpdir(), "figs-")), name);
}

describe("csv reading", () => {
  it("reads a golden table with the documented schema", () => {
    const t = readCsv(path.join(GOLDEN, "convergence.csv"));
    expect(t.columns).toEqual(["level", "h", "dt", "error"]);
    expect(t.rows.length).toBe(3);
  });

  it("names missing columns", () => {
    const p = tmpFile("bad.csv");
    fs.writeFileSync(p, "a,b\n1,2\n");
    const t = readCsv(p);
    expect(() => requireColumns(t, ["a", "err"], p)).toThrowError(/err/);
  });
});

describe("ratio sweep", () => {
  it("renders one curve per input file", () => {
    const { svg, annotations } = renderFigure({
      kind: "ratio-sweep",
      inputs: [
        path.join(GOLDEN, "carleman_sweep.csv"),
        path.join(GOLDEN, "carleman_sweep_w1.csv"),
      ],
      output: "unused.svg",
    });
    expect(svg).toContain("<svg");
    expect((svg.match(/<polyline/g) ?? []).length).toBe(2);
    expect(svg).toContain("carleman_sweep_w1");
    expect(annotations.empirical_C).toBeGreaterThan(0);
  });

  it("rejects a stability CSV by naming the missing columns", () => {
    expect(() =>
      renderFigure({
        kind: "ratio-sweep",
        inputs: [path.join(GOLDEN, "inverse_stability.csv")],
        output: "unused.svg",
      }),
    ).toThrowError(/ratio/);
  });
});

describe("stability log-log", () => {
  it("overlays the fitted bound for full ladders", () => {
    const { svg, annotations } = renderFigure({
      kind: "stability-loglog",
      inputs: [path.join(GOLDEN, "inverse_stability.csv")],
      output: "unused.svg",
    });
    expect(svg).toContain("bound C d^theta");
    expect(annotations.theta_fit).toBeCloseTo(1.0, 6);
  });

  it("refuses the fit overlay for two rows and annotates a warning", () => {
    const src = fs.readFileSync(path.join(GOLDEN, "inverse_stability.csv"), "utf-8");
    const lines = src.trim().split("\n");
    const p = tmpFile("two.csv");
    fs.writeFileSync(p, lines.slice(0, 3).join("\n") + "\n");
    const { svg, annotations } = renderFigure({
      kind: "stability-loglog",
      inputs: [p],
      output: "unused.svg",
    });
    expect(svg).toContain("fit overlay refused");
    expect(annotations.fit_refused).toBe(1);
  });
});

describe("reconstruction heatmap", () => {
  it("renders cells and the max-error annotation", () => {
    const { svg, annotations } = renderFigure({
      kind: "recon-heatmap",
      inputs: [path.join(GOLDEN, "recon_error.csv")],
      output: "unused.svg",
    });
    expect(svg).toContain("max error");
    expect((svg.match(/<rect/g) ?? []).length).toBeGreaterThan(100);
    expect(annotations.max_error).toBeGreaterThan(0);
  });
});

describe("convergence", () => {
  it("annotated slope matches the golden value 2.0 within 0.1", () => {
    const { svg, annotations } = renderFigure({
      kind: "convergence",
      inputs: [path.join(GOLDEN, "convergence.csv")],
      output: "unused.svg",
    });
    expect(Math.abs(annotations.slope - 2.0)).toBeLessThanOrEqual(0.1);
    expect(svg).toContain(`slope = ${annotations.slope.toFixed(2)}`);
  });

  it("slope helper reproduces a hand-built power law", () => {
    const h = [0.1, 0.05, 0.025];
    const err = h.map((v) => 3 * v ** 2);
    expect(convergenceSlope(h, err)).toBeCloseTo(2.0, 12);
  });
});

describe("determinism", () => {
  it("identical inputs give identical SVG strings", () => {
    const spec = {
      kind: "convergence" as const,
      inputs: [path.join(GOLDEN, "convergence.csv")],
      output: "unused.svg",
    };
    expect(renderFigure(spec).svg).toBe(renderFigure(spec).svg);
  });
});

describe("cli", () => {
  it("renders all four golden kinds end to end", () => {
    const outDir = fs.mkdtempSync(path.join(os.tmpdir(), "figs-out-"));
    const jobs: Array<[string, string[]]> = [
      ["ratio-sweep", [path.join(GOLDEN, "carleman_sweep.csv")]],
      ["stability-loglog", [path.join(GOLDEN, "inverse_stability.csv")]],
      ["recon-heatmap", [path.join(GOLDEN, "recon_error.csv")]],
      ["convergence", [path.join(GOLDEN, "convergence.csv")]],
    ];
    for (const [kind, inputs] of jobs) {
      const out = path.join(outDir, `${kind}.svg`);
      const args = ["--kind", kind, ...inputs.flatMap((p) => ["--in", p]), "--out", out];
      expect(main(args)).toBe(0);
      const body = fs.readFileSync(out, "utf-8");
      expect(body.length).toBeGreaterThan(500);
      expect(body).toContain("</svg>");
    }
  });

  it("rejects unknown kinds and non-svg outputs", () => {
    expect(main(["--kind", "pie", "--in", "x.csv", "--out", "y.svg"])).toBe(2);
    expect(
      main(["--kind", "convergence", "--in", path.join(GOLDEN, "convergence.csv"),
            "--out", "y.png"]),
    ).toBe(2);
  });
});
