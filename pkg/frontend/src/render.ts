/**
 * End-to-end pipeline: CSV rows in, aggregated table + figure files out.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { aggregate, formatTable, type AggPoint } from "./aggregate.js";
import { checkSchemaVersion, readInputs, requireColumns } from "./csv.js";
import {
  renderLineFigure, renderMultiPanel, renderPolarPattern,
} from "./figures.js";
import { yColumns, yLabels, type FigureSpec } from "./spec.js";

export interface RenderResult {
  points: AggPoint[];
  table: string;
  /** Paths written, empty when dry-running. */
  outputs: string[];
}

function buildSvg(spec: FigureSpec, points: AggPoint[]): string {
  const metrics = yColumns(spec);
  const labels = yLabels(spec);
  if (spec.kind === "line") {
    return renderLineFigure(points, {
      title: spec.title,
      xLabel: spec.xLabel ?? spec.x,
      yLabel: labels[0],
    });
  }
  if (spec.kind === "multi-panel") {
    return renderMultiPanel(points, {
      title: spec.title,
      xLabel: spec.xLabel ?? spec.x,
      metrics,
      yLabels: labels,
    });
  }
  return renderPolarPattern(points, {
    title: spec.title,
    sector: spec.sector,
  });
}

async function writePng(svg: string, pngPath: string): Promise<boolean> {
  let resvg: typeof import("@resvg/resvg-js");
  try {
    resvg = await import("@resvg/resvg-js");
  } catch {
    return false; // native rasterizer unavailable: SVG output still stands
  }
  const rendered = new resvg.Resvg(svg, {
    fitTo: { mode: "width", value: 1280 },
    background: "white",
  });
  fs.writeFileSync(pngPath, rendered.render().asPng());
  return true;
}

/**
 * Run a figure spec. With `dryRun` the aggregation table is returned and
 * nothing touches the filesystem; otherwise `<output>.svg` is always
 * written and `<output>.png` when the rasterizer is available.
 */
export async function render(spec: FigureSpec, specDir: string,
                             dryRun = false): Promise<RenderResult> {
  const inputList =
    typeof spec.input === "string" ? [spec.input] : spec.input;
  const inputs = inputList.map((p) =>
    path.isAbsolute(p) ? p : path.join(specDir, p));
  const table = readInputs(inputs);
  checkSchemaVersion(table);
  const needed = [spec.x, ...yColumns(spec)];
  if (spec.series) needed.push(spec.series);
  needed.push(...(spec.groupBy ?? []));
  requireColumns(table, needed);

  const points = aggregate(table, {
    x: spec.x,
    metrics: yColumns(spec),
    series: spec.series,
    groupBy: spec.groupBy,
  });
  const text = formatTable(points);
  if (dryRun) {
    return { points, table: text, outputs: [] };
  }

  const base = spec.output ?? "figure";
  const outBase = path.isAbsolute(base) ? base : path.join(specDir, base);
  fs.mkdirSync(path.dirname(outBase), { recursive: true });
  const svg = buildSvg(spec, points);
  const svgPath = `${outBase}.svg`;
  fs.writeFileSync(svgPath, svg, "utf8");
  const outputs = [svgPath];
  const pngPath = `${outBase}.png`;
  if (await writePng(svg, pngPath)) {
    outputs.push(pngPath);
  }
  return { points, table: text, outputs };
}
