/**
 * Figure specification: what to read, how to group it, what to draw.
 */

export type FigureKind = "line" | "multi-panel" | "pattern-polar";

export interface FigureSpec {
  /** One CSV path or several; multiple files are concatenated. */
  input: string | string[];
  kind: FigureKind;
  /** Column for the horizontal axis (angle column for pattern-polar). */
  x: string;
  /** Metric column; multi-panel takes one column per panel. */
  y: string | string[];
  /** Column whose values become one plotted series each. */
  series?: string;
  /** Extra grouping columns folded into the series label. */
  groupBy?: string[];
  /** Output image base path; .svg and .png are written next to it. */
  output?: string;
  title?: string;
  xLabel?: string;
  yLabel?: string | string[];
  /** Angular shading bounds in degrees for pattern-polar figures. */
  sector?: [number, number];
}

export class SpecError extends Error {}

const KINDS: FigureKind[] = ["line", "multi-panel", "pattern-polar"];

function isStringArray(v: unknown): v is string[] {
  return Array.isArray(v) && v.every((e) => typeof e === "string");
}

export function parseSpec(doc: unknown): FigureSpec {
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new SpecError("figure spec must be a JSON object");
  }
  const raw = doc as Record<string, unknown>;
  const known = new Set(["input", "kind", "x", "y", "series", "groupBy",
    "output", "title", "xLabel", "yLabel", "sector"]);
  for (const key of Object.keys(raw)) {
    if (!known.has(key)) throw new SpecError(`unknown spec field '${key}'`);
  }

  const { input, kind, x, y } = raw;
  if (typeof input !== "string" && !isStringArray(input)) {
    throw new SpecError("'input' must be a CSV path or a list of paths");
  }
  if (typeof input !== "string" && input.length === 0) {
    throw new SpecError("'input' must name at least one CSV file");
  }
  if (typeof kind !== "string" || !KINDS.includes(kind as FigureKind)) {
    throw new SpecError(`'kind' must be one of ${KINDS.join(", ")}`);
  }
  if (typeof x !== "string" || x.length === 0) {
    throw new SpecError("'x' must name a column");
  }
  if (typeof y !== "string" && !isStringArray(y)) {
    throw new SpecError("'y' must name a column or a list of columns");
  }
  const yList = typeof y === "string" ? [y] : y;
  if (yList.length === 0) throw new SpecError("'y' must not be empty");
  if (kind !== "multi-panel" && yList.length > 1) {
    throw new SpecError(`'${kind}' figures take a single 'y' column`);
  }

  if (raw.series !== undefined && typeof raw.series !== "string") {
    throw new SpecError("'series' must name a column");
  }
  if (raw.groupBy !== undefined && !isStringArray(raw.groupBy)) {
    throw new SpecError("'groupBy' must be a list of column names");
  }
  if (raw.output !== undefined && typeof raw.output !== "string") {
    throw new SpecError("'output' must be a path");
  }
  if (raw.sector !== undefined) {
    const s = raw.sector;
    if (!Array.isArray(s) || s.length !== 2 ||
        !s.every((v) => typeof v === "number" && Number.isFinite(v))) {
      throw new SpecError("'sector' must be [lowDeg, highDeg]");
    }
    if (kind !== "pattern-polar") {
      throw new SpecError("'sector' applies only to pattern-polar figures");
    }
  }
  for (const field of ["title", "xLabel"] as const) {
    if (raw[field] !== undefined && typeof raw[field] !== "string") {
      throw new SpecError(`'${field}' must be a string`);
    }
  }
  if (raw.yLabel !== undefined && typeof raw.yLabel !== "string" &&
      !isStringArray(raw.yLabel)) {
    throw new SpecError("'yLabel' must be a string or a list of strings");
  }
  return raw as unknown as FigureSpec;
}

export function yColumns(spec: FigureSpec): string[] {
  return typeof spec.y === "string" ? [spec.y] : spec.y;
}

export function yLabels(spec: FigureSpec): string[] {
  const cols = yColumns(spec);
  if (spec.yLabel === undefined) return cols;
  const labels = typeof spec.yLabel === "string" ? [spec.yLabel] : spec.yLabel;
  return cols.map((col, i) => labels[i] ?? col);
}
