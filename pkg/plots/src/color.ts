/** Log-scale color mapping for score heatmaps. */

// compact viridis-like ramp; interpolated in RGB
const RAMP: [number, number, number][] = [
  [68, 1, 84],
  [59, 82, 139],
  [33, 145, 140],
  [94, 201, 98],
  [253, 231, 37],
];

export const SCORE_FLOOR = 1e-8;

function lerp(a: number, b: number, t: number): number {
  return a + (b - a) * t;
}

/** Map u in [0, 1] to an rgb() string along the ramp. */
export function ramp(u: number): string {
  const x = Math.min(1, Math.max(0, u)) * (RAMP.length - 1);
  const i = Math.min(RAMP.length - 2, Math.floor(x));
  const t = x - i;
  const c = RAMP[i].map((v, k) => Math.round(lerp(v, RAMP[i + 1][k], t)));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}

/**
 * Scores span orders of magnitude, so color is assigned by log10 with a
 * fixed floor; the returned function maps a score to [0, 1].
 */
export function logScale(maxScore: number): (s: number) => number {
  const hi = Math.log10(Math.max(maxScore, SCORE_FLOOR * 10));
  const lo = Math.log10(SCORE_FLOOR);
  return (s: number) => {
    const v = Math.log10(Math.max(s, SCORE_FLOOR));
    return (v - lo) / (hi - lo);
  };
}
