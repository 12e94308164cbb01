/** Tiny deterministic SVG string builder (no DOM, no dependencies). */

export type Attrs = Record<string, string | number>;

function fmt(v: string | number): string {
  if (typeof v === "number") {
    // fixed precision keeps output byte-stable across runs
    return Number.isInteger(v) ? String(v) : v.toFixed(3);
  }
  return v;
}

export function el(tag: string, attrs: Attrs, children: string[] = [], text?: string): string {
  const a = Object.keys(attrs)
    .sort()
    .map((k) => ` ${k}="${fmt(attrs[k])}"`)
    .join("");
  if (children.length === 0 && text === undefined) {
    return `<${tag}${a}/>`;
  }
  const inner = text !== undefined ? escapeText(text) : children.join("");
  return `<${tag}${a}>${inner}</${tag}>`;
}

export function escapeText(t: string): string {
  return t.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function svgDocument(width: number, height: number, children: string[]): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">` +
    children.join("") +
    `</svg>\n`
  );
}

export function rect(x: number, y: number, w: number, h: number, fill: string, extra: Attrs = {}): string {
  return el("rect", { x, y, width: w, height: h, fill, ...extra });
}

export function text(x: number, y: number, content: string, extra: Attrs = {}): string {
  return el("text", { x, y, "font-size": 10, fill: "#222", ...extra }, [], content);
}

export function line(x1: number, y1: number, x2: number, y2: number, stroke: string, extra: Attrs = {}): string {
  return el("line", { x1, y1, x2, y2, stroke, "stroke-width": 1, ...extra });
}

export function polyline(points: [number, number][], stroke: string, extra: Attrs = {}): string {
  const pts = points.map(([x, y]) => `${x.toFixed(3)},${y.toFixed(3)}`).join(" ");
  return el("polyline", { points: pts, fill: "none", stroke, "stroke-width": 1.5, ...extra });
}
