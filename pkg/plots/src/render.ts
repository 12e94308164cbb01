/**
 * Render a speclink report bundle to SVG images.
 *
 *   node dist/render.js --report DIR --out DIR
 *
 * Reads scores_heatmap.csv, support_grid.csv, inverse_spectrum.csv and,
 * when present, roc.csv; writes one SVG per artifact.  This program only
 * draws what the CSV files say: it never recomputes any statistic.
 */

import * as fs from "fs";
import * as path from "path";

import { parseCsv } from "./csv";
import { inverseSpectrum, rocCurve, scoresHeatmap, supportGrid } from "./charts";

function parseArgs(argv: string[]): { report: string; out: string } {
  let report: string | undefined;
  let out: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--report") report = argv[++i];
    else if (argv[i] === "--out") out = argv[++i];
    else throw new Error(`unknown argument ${argv[i]}`);
  }
  if (!report || !out) {
    throw new Error("usage: render --report DIR --out DIR");
  }
  return { report, out };
}

function readTable(dir: string, name: string) {
  const p = path.join(dir, name);
  if (!fs.existsSync(p)) {
    throw new Error(`missing ${p}`);
  }
  return parseCsv(fs.readFileSync(p, "utf-8"));
}

export function renderBundle(report: string, out: string): string[] {
  const made: string[] = [];
  fs.mkdirSync(out, { recursive: true });
  const put = (name: string, svg: string) => {
    fs.writeFileSync(path.join(out, name), svg);
    made.push(name);
  };
  put("scores_heatmap.svg", scoresHeatmap(readTable(report, "scores_heatmap.csv")));
  put("support_grid.svg", supportGrid(readTable(report, "support_grid.csv")));
  put("inverse_spectrum.svg", inverseSpectrum(readTable(report, "inverse_spectrum.csv")));
  if (fs.existsSync(path.join(report, "roc.csv"))) {
    put("roc.svg", rocCurve(readTable(report, "roc.csv")));
  }
  return made;
}

function main(): number {
  try {
    const { report, out } = parseArgs(process.argv.slice(2));
    const made = renderBundle(report, out);
    process.stdout.write(made.join("\n") + "\n");
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main());
}
