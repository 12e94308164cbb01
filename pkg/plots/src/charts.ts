/**
 * Figure generators for speclink report bundles.
 *
 * Every function is a pure map from parsed CSV tables to an SVG string:
 * no numerics beyond scaling pixels, so the plots can never disagree with
 * the files they render.
 */

import { Table, column } from "./csv";
import { SCORE_FLOOR, logScale, ramp } from "./color";
import { line, polyline, rect, svgDocument, text } from "./svg";

const CELL = 26;
const PAD = 46;

const PRIOR_FILL = "#b0b0b0";
const DIAG_FILL = "#3a3a3a";
const EMPTY_FILL = "#f2f2f2";

function dim(table: Table): number {
  let m = 0;
  for (const r of table.rows) {
    m = Math.max(m, (r[0] as number) + 1, (r[1] as number) + 1);
  }
  return m;
}

function gridFrame(m: number, x0: number, y0: number, title: string): string[] {
  const parts: string[] = [];
  parts.push(text(x0, y0 - 10, title, { "font-size": 12, "font-weight": "bold" }));
  for (let k = 0; k < m; k++) {
    parts.push(
      text(x0 - 14, y0 + k * CELL + CELL / 2 + 3, String(k), { "text-anchor": "middle" }),
      text(x0 + k * CELL + CELL / 2, y0 + m * CELL + 14, String(k), { "text-anchor": "middle" }),
    );
  }
  return parts;
}

/** Symmetric score heatmap; prior cells gray, candidates on a log color scale. */
export function scoresHeatmap(scores: Table): string {
  const m = dim(scores);
  const cells: string[] = [];
  let maxScore = 0;
  for (const r of scores.rows) {
    if (r[2] !== null) maxScore = Math.max(maxScore, r[2] as number);
  }
  const scale = logScale(maxScore);
  const x0 = PAD;
  const y0 = PAD;
  for (let i = 0; i < m; i++) {
    cells.push(rect(x0 + i * CELL, y0 + i * CELL, CELL - 1, CELL - 1, DIAG_FILL));
  }
  for (const r of scores.rows) {
    const [i, j, score, inPrior] = r as [number, number, number | null, number];
    const fill =
      inPrior === 1
        ? PRIOR_FILL
        : score === null || score <= SCORE_FLOOR
          ? EMPTY_FILL
          : ramp(scale(score));
    for (const [a, b] of [
      [i, j],
      [j, i],
    ]) {
      cells.push(rect(x0 + b * CELL, y0 + a * CELL, CELL - 1, CELL - 1, fill));
    }
  }
  const frame = gridFrame(m, x0, y0, "candidate edge scores (log scale)");
  // legend: floor .. max
  const legendY = y0 + m * CELL + 26;
  const steps = 40;
  const lw = (m * CELL) / steps;
  const legend: string[] = [];
  for (let s = 0; s < steps; s++) {
    legend.push(rect(x0 + s * lw, legendY, lw + 0.5, 10, ramp(s / (steps - 1))));
  }
  legend.push(
    text(x0, legendY + 22, SCORE_FLOOR.toExponential(0)),
    text(x0 + m * CELL, legendY + 22, maxScore > 0 ? maxScore.toPrecision(2) : "0", {
      "text-anchor": "end",
    }),
  );
  return svgDocument(2 * PAD + m * CELL, legendY + 34, [...cells, ...frame, ...legend]);
}

/** Side-by-side support grids: prior, predicted, and truth when known. */
export function supportGrid(grid: Table): string {
  const m = dim(grid);
  const hasTruth = grid.rows.some((r) => (r[4] as number) >= 0);
  const panels: [string, number][] = hasTruth
    ? [
        ["prior", 2],
        ["predicted", 3],
        ["truth", 4],
      ]
    : [
        ["prior", 2],
        ["predicted", 3],
      ];
  const parts: string[] = [];
  panels.forEach(([title, col], p) => {
    const x0 = PAD + p * (m * CELL + PAD);
    const y0 = PAD;
    for (let i = 0; i < m; i++) {
      parts.push(rect(x0 + i * CELL, y0 + i * CELL, CELL - 1, CELL - 1, DIAG_FILL));
    }
    for (const r of grid.rows) {
      const i = r[0] as number;
      const j = r[1] as number;
      const on = (r[col] as number) === 1;
      const fill = on ? "#1f66aa" : EMPTY_FILL;
      for (const [a, b] of [
        [i, j],
        [j, i],
      ]) {
        parts.push(rect(x0 + b * CELL, y0 + a * CELL, CELL - 1, CELL - 1, fill));
      }
    }
    parts.push(...gridFrame(m, x0, y0, title));
  });
  const width = PAD + panels.length * (m * CELL + PAD);
  return svgDocument(width, 2 * PAD + m * CELL + 10, parts);
}

/** Small multiples of |inverse spectrum| entries against frequency. */
export function inverseSpectrum(curves: Table): string {
  const m = dim2(curves);
  const theta = column(curves, "theta") as number[];
  const absval = column(curves, "abs") as number[];
  const ii = column(curves, "i") as number[];
  const jj = column(curves, "j") as number[];
  const thetaMax = Math.max(...theta);
  let vmax = 0;
  for (const v of absval) vmax = Math.max(vmax, v);
  if (vmax === 0) vmax = 1;
  const series = new Map<string, [number, number][]>();
  for (let r = 0; r < theta.length; r++) {
    const key = `${ii[r]},${jj[r]}`;
    if (!series.has(key)) series.set(key, []);
    series.get(key)!.push([theta[r], absval[r]]);
  }
  const PW = 110;
  const PH = 72;
  const GAP = 12;
  const parts: string[] = [];
  parts.push(
    text(PAD, 24, `inverse-spectrum entry magnitudes (shared max ${vmax.toPrecision(3)})`, {
      "font-size": 12,
      "font-weight": "bold",
    }),
  );
  for (let i = 0; i < m; i++) {
    for (let j = 0; j < m; j++) {
      const x0 = PAD + j * (PW + GAP);
      const y0 = 40 + i * (PH + GAP);
      parts.push(rect(x0, y0, PW, PH, "#fbfbfb", { stroke: "#cccccc", "stroke-width": 0.7 }));
      parts.push(text(x0 + 4, y0 + 12, `(${i},${j})`, { "font-size": 9, fill: "#666" }));
      const pts = (series.get(`${i},${j}`) ?? [])
        .slice()
        .sort((a, b) => a[0] - b[0])
        .map(([t, v]): [number, number] => [
          x0 + (t / thetaMax) * PW,
          y0 + PH - (v / vmax) * (PH - 16),
        ]);
      if (pts.length > 1) {
        parts.push(polyline(pts, i === j ? "#888888" : "#c0392b"));
      }
    }
  }
  const width = PAD * 2 + m * (PW + GAP);
  const height = 40 + m * (PH + GAP) + PAD;
  return svgDocument(width, height, parts);
}

function dim2(curves: Table): number {
  const ii = column(curves, "i") as number[];
  let m = 0;
  for (const v of ii) m = Math.max(m, v + 1);
  return m;
}

/** ROC curve over the score threshold, with the chance diagonal. */
export function rocCurve(roc: Table): string {
  const fpr = column(roc, "fpr") as number[];
  const tpr = column(roc, "tpr") as number[];
  const W = 300;
  const H = 300;
  const x = (v: number) => PAD + v * W;
  const y = (v: number) => PAD + (1 - v) * H;
  const pts: [number, number][] = fpr.map((f, k) => [x(f), y(tpr[k])]);
  const parts = [
    rect(PAD, PAD, W, H, "#fbfbfb", { stroke: "#999999" }),
    line(x(0), y(0), x(1), y(1), "#bbbbbb", { "stroke-dasharray": "4,3" }),
    polyline(pts, "#1f66aa", { "stroke-width": 2 }),
    text(PAD + W / 2, PAD + H + 28, "false positive rate", { "text-anchor": "middle" }),
    text(PAD - 30, PAD + H / 2, "tpr", { "text-anchor": "middle" }),
    text(PAD, PAD - 10, "ROC over the decision threshold", {
      "font-size": 12,
      "font-weight": "bold",
    }),
  ];
  for (const v of [0, 0.5, 1]) {
    parts.push(
      text(x(v), PAD + H + 12, v.toFixed(1), { "text-anchor": "middle", "font-size": 8 }),
      text(PAD - 14, y(v) + 3, v.toFixed(1), { "text-anchor": "middle", "font-size": 8 }),
    );
  }
  return svgDocument(2 * PAD + W, 2 * PAD + H, parts);
}
