/**
 * Minimal CSV reading for speclink report bundles.
 *
 * The emitter writes plain comma-separated numeric fields (no quoting, '.'
 * decimal separator); empty fields mark cells without a value, e.g. scores
 * of pairs already inside the prior support.
 */

export interface Table {
  header: string[];
  rows: (number | null)[][];
}

export function parseCsv(text: string): Table {
  const lines = text
    .split(/\r\n|\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new Error("empty CSV");
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line) => {
    return line.split(",").map((field) => {
      if (field === "") return null;
      // accept Python float spellings: inf, -inf, nan
      if (field === "inf") return Infinity;
      if (field === "-inf") return -Infinity;
      if (field === "nan") return NaN;
      const v = Number(field);
      if (Number.isNaN(v)) {
        throw new Error(`non-numeric CSV field: ${field}`);
      }
      return v;
    });
  });
  for (const r of rows) {
    if (r.length !== header.length) {
      throw new Error("ragged CSV row");
    }
  }
  return { header, rows };
}

export function column(t: Table, name: string): (number | null)[] {
  const k = t.header.indexOf(name);
  if (k < 0) {
    throw new Error(`CSV lacks column ${name}`);
  }
  return t.rows.map((r) => r[k]);
}
