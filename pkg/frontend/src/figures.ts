/**
 * SVG figure builders. Pure string assembly, no DOM, no clock, no
 * randomness, so identical inputs give identical bytes.
 */

import type { AggPoint } from "./aggregate.js";
import type { Cell } from "./csv.js";
import { SpecError } from "./spec.js";

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2",
];

const FONT = "font-family=\"Helvetica, Arial, sans-serif\"";

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;")
    .replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function fmt(value: number): string {
  const rounded = Math.round(value * 100) / 100;
  return Object.is(rounded, -0) ? "0" : String(rounded);
}

/** Round-valued axis ticks on a 1-2-5 grid covering [lo, hi]. */
export function niceTicks(lo: number, hi: number, target = 5): number[] {
  if (!(hi > lo)) return [lo];
  const rawStep = (hi - lo) / target;
  const power = 10 ** Math.floor(Math.log10(rawStep));
  const candidates = [1, 2, 5, 10].map((m) => m * power);
  const step = candidates.find((c) => c >= rawStep) ?? candidates[3];
  const first = Math.ceil(lo / step - 1e-9);
  const last = Math.floor(hi / step + 1e-9);
  const ticks: number[] = [];
  for (let i = first; i <= last; i++) {
    ticks.push(i === 0 ? 0 : i * step);
  }
  return ticks;
}

function tickLabel(value: number): string {
  const abs = Math.abs(value);
  if (abs !== 0 && (abs >= 1e5 || abs < 1e-3)) {
    return value.toExponential(1);
  }
  return fmt(value);
}

interface Linear {
  (value: number): number;
  lo: number;
  hi: number;
}

function linear(lo: number, hi: number, out0: number, out1: number): Linear {
  const span = hi - lo || 1;
  const map = ((value: number) =>
    out0 + ((value - lo) / span) * (out1 - out0)) as Linear;
  map.lo = lo;
  map.hi = hi;
  return map;
}

function seriesNames(points: AggPoint[]): string[] {
  const names: string[] = [];
  for (const p of points) {
    if (!names.includes(p.series)) names.push(p.series);
  }
  return names.sort((a, b) => a.localeCompare(b));
}

export function seriesColor(names: string[], series: string): string {
  return PALETTE[names.indexOf(series) % PALETTE.length];
}

interface XAxis {
  position(x: Cell): number;
  ticks: { at: number; label: string }[];
}

function xAxisFor(points: AggPoint[], x0: number, x1: number): XAxis {
  const values = points.map((p) => p.x);
  const numeric = values.every((v) => typeof v === "number");
  if (numeric) {
    const nums = values as number[];
    const lo = Math.min(...nums);
    const hi = Math.max(...nums);
    const scale = linear(lo, hi, x0, x1);
    return {
      position: (v) => scale(v as number),
      ticks: niceTicks(lo, hi).filter((t) => t >= lo && t <= hi)
        .map((t) => ({ at: scale(t), label: tickLabel(t) })),
    };
  }
  const labels = [...new Set(values.map(String))]
    .sort((a, b) => a.localeCompare(b));
  const scale = linear(0, Math.max(labels.length - 1, 1), x0, x1);
  return {
    position: (v) => scale(labels.indexOf(String(v))),
    ticks: labels.map((label, i) => ({ at: scale(i), label })),
  };
}

function yDomain(points: AggPoint[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const p of points) {
    lo = Math.min(lo, p.mean - p.ci95);
    hi = Math.max(hi, p.mean + p.ci95);
  }
  if (lo === hi) {
    lo -= Math.abs(lo) * 0.05 + 1;
    hi += Math.abs(hi) * 0.05 + 1;
  }
  const pad = (hi - lo) * 0.06;
  return [lo - pad, hi + pad];
}

interface PanelGeometry {
  left: number;
  top: number;
  width: number;
  height: number;
}

function drawPanel(points: AggPoint[], names: string[], geo: PanelGeometry,
                   xLabel: string, yLabel: string): string {
  const { left, top, width, height } = geo;
  const right = left + width;
  const bottom = top + height;
  const xAxis = xAxisFor(points, left + 8, right - 8);
  const [yLo, yHi] = yDomain(points);
  const yScale = linear(yLo, yHi, bottom, top);

  const parts: string[] = [];
  parts.push(`<rect x="${fmt(left)}" y="${fmt(top)}" width="${fmt(width)}" ` +
    `height="${fmt(height)}" fill="white" stroke="#333" stroke-width="1"/>`);
  for (const tick of niceTicks(yLo, yHi)) {
    if (tick < yLo || tick > yHi) continue;
    const y = yScale(tick);
    parts.push(`<line x1="${fmt(left)}" y1="${fmt(y)}" x2="${fmt(right)}" ` +
      `y2="${fmt(y)}" stroke="#ddd" stroke-width="0.5"/>`);
    parts.push(`<text x="${fmt(left - 6)}" y="${fmt(y + 3.5)}" ` +
      `text-anchor="end" font-size="11" ${FONT}>${esc(tickLabel(tick))}</text>`);
  }
  for (const tick of xAxis.ticks) {
    parts.push(`<line x1="${fmt(tick.at)}" y1="${fmt(bottom)}" ` +
      `x2="${fmt(tick.at)}" y2="${fmt(bottom + 4)}" stroke="#333" ` +
      `stroke-width="1"/>`);
    parts.push(`<text x="${fmt(tick.at)}" y="${fmt(bottom + 16)}" ` +
      `text-anchor="middle" font-size="11" ${FONT}>${esc(tick.label)}</text>`);
  }
  parts.push(`<text x="${fmt(left + width / 2)}" y="${fmt(bottom + 32)}" ` +
    `text-anchor="middle" font-size="12" ${FONT}>${esc(xLabel)}</text>`);
  parts.push(`<text x="${fmt(left - 44)}" y="${fmt(top + height / 2)}" ` +
    `text-anchor="middle" font-size="12" ${FONT} transform="rotate(-90 ` +
    `${fmt(left - 44)} ${fmt(top + height / 2)})">${esc(yLabel)}</text>`);

  for (const series of names) {
    const own = points.filter((p) => p.series === series);
    if (own.length === 0) continue;
    const color = seriesColor(names, series);
    const coords = own.map((p) =>
      [xAxis.position(p.x), yScale(p.mean)] as const);
    if (coords.length > 1) {
      const path = coords.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
      parts.push(`<polyline class="series" points="${path}" fill="none" ` +
        `stroke="${color}" stroke-width="1.8"/>`);
    }
    for (let i = 0; i < own.length; i++) {
      const [cx, cy] = coords[i];
      const point = own[i];
      if (point.ci95 > 0) {
        const yTop = yScale(point.mean + point.ci95);
        const yBot = yScale(point.mean - point.ci95);
        parts.push(`<g class="errorbar" stroke="${color}" stroke-width="1">` +
          `<line x1="${fmt(cx)}" y1="${fmt(yTop)}" x2="${fmt(cx)}" ` +
          `y2="${fmt(yBot)}"/>` +
          `<line x1="${fmt(cx - 3)}" y1="${fmt(yTop)}" x2="${fmt(cx + 3)}" ` +
          `y2="${fmt(yTop)}"/>` +
          `<line x1="${fmt(cx - 3)}" y1="${fmt(yBot)}" x2="${fmt(cx + 3)}" ` +
          `y2="${fmt(yBot)}"/></g>`);
      }
      parts.push(`<circle class="marker" cx="${fmt(cx)}" cy="${fmt(cy)}" ` +
        `r="2.6" fill="${color}"/>`);
    }
  }
  return parts.join("\n");
}

function drawLegend(names: string[], x: number, y: number): string {
  const parts: string[] = [];
  names.forEach((series, i) => {
    const row = y + i * 16;
    const color = seriesColor(names, series);
    parts.push(`<g class="legend">` +
      `<line x1="${fmt(x)}" y1="${fmt(row)}" x2="${fmt(x + 18)}" ` +
      `y2="${fmt(row)}" stroke="${color}" stroke-width="1.8"/>` +
      `<circle cx="${fmt(x + 9)}" cy="${fmt(row)}" r="2.6" ` +
      `fill="${color}"/>` +
      `<text x="${fmt(x + 24)}" y="${fmt(row + 3.5)}" font-size="11" ` +
      `${FONT}>${esc(series)}</text></g>`);
  });
  return parts.join("\n");
}

function svgDocument(width: number, height: number, body: string): string {
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
    `height="${height}" viewBox="0 0 ${width} ${height}">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n` +
    `${body}\n</svg>\n`;
}

export interface LineOptions {
  title?: string;
  xLabel: string;
  yLabel: string;
}

export function renderLineFigure(points: AggPoint[],
                                 opts: LineOptions): string {
  if (points.length === 0) throw new SpecError("nothing to plot");
  const width = 640;
  const height = 430;
  const names = seriesNames(points);
  const geo = { left: 64, top: 42, width: width - 88, height: height - 112 };
  const parts: string[] = [];
  if (opts.title) {
    parts.push(`<text x="${fmt(width / 2)}" y="24" text-anchor="middle" ` +
      `font-size="14" ${FONT}>${esc(opts.title)}</text>`);
  }
  parts.push(drawPanel(points, names, geo, opts.xLabel, opts.yLabel));
  parts.push(drawLegend(names, geo.left + geo.width - 140, geo.top + 14));
  return svgDocument(width, height, parts.join("\n"));
}

export interface MultiPanelOptions {
  title?: string;
  xLabel: string;
  metrics: string[];
  yLabels: string[];
}

export function renderMultiPanel(points: AggPoint[],
                                 opts: MultiPanelOptions): string {
  if (points.length === 0) throw new SpecError("nothing to plot");
  const names = seriesNames(points);
  const panelWidth = 330;
  const panelHeight = 300;
  const gap = 70;
  const width = 64 + opts.metrics.length * (panelWidth + gap);
  const height = panelHeight + 140;
  const parts: string[] = [];
  if (opts.title) {
    parts.push(`<text x="${fmt(width / 2)}" y="24" text-anchor="middle" ` +
      `font-size="14" ${FONT}>${esc(opts.title)}</text>`);
  }
  parts.push(drawLegend(names, 64, 44));
  opts.metrics.forEach((metric, i) => {
    const own = points.filter((p) => p.metric === metric);
    if (own.length === 0) {
      throw new SpecError(`no rows aggregated for metric '${metric}'`);
    }
    const geo = {
      left: 64 + i * (panelWidth + gap),
      top: 60 + 16 * names.length,
      width: panelWidth,
      height: panelHeight - 16 * names.length,
    };
    parts.push(drawPanel(own, names, geo, opts.xLabel, opts.yLabels[i]));
  });
  return svgDocument(width, height, parts.join("\n"));
}

export interface PolarOptions {
  title?: string;
  sector?: [number, number];
  /** Radial floor relative to the peak, in dB (default 60 below). */
  dynamicRange?: number;
}

export function renderPolarPattern(points: AggPoint[],
                                   opts: PolarOptions): string {
  if (points.length === 0) throw new SpecError("nothing to plot");
  for (const p of points) {
    if (typeof p.x !== "number") {
      throw new SpecError("pattern-polar needs a numeric angle column");
    }
  }
  const names = seriesNames(points);
  const width = 560;
  const radius = 210;
  const cx = width / 2;
  const cy = radius + 56;
  const height = cy + 40;
  const range = opts.dynamicRange ?? 60;
  const top = Math.ceil(Math.max(...points.map((p) => p.mean)) / 10) * 10;
  const floor = top - range;
  const rOf = (gainDb: number) =>
    Math.max(0, (Math.min(gainDb, top) - floor) / range) * radius;
  const place = (angleDeg: number, r: number): [number, number] => {
    const rad = (angleDeg * Math.PI) / 180;
    return [cx + r * Math.cos(rad), cy - r * Math.sin(rad)];
  };

  const parts: string[] = [];
  if (opts.title) {
    parts.push(`<text x="${fmt(cx)}" y="24" text-anchor="middle" ` +
      `font-size="14" ${FONT}>${esc(opts.title)}</text>`);
  }
  if (opts.sector) {
    const [lo, hi] = opts.sector;
    const [x0, y0] = place(lo, radius);
    const [x1, y1] = place(hi, radius);
    const large = hi - lo > 180 ? 1 : 0;
    parts.push(`<path class="sector" d="M ${fmt(cx)} ${fmt(cy)} ` +
      `L ${fmt(x0)} ${fmt(y0)} A ${fmt(radius)} ${fmt(radius)} 0 ${large} 1 ` +
      `${fmt(x1)} ${fmt(y1)} Z" fill="#fff3cd" stroke="none"/>`);
  }
  for (let ringDb = top; ringDb >= floor; ringDb -= 20) {
    const r = rOf(ringDb);
    if (r <= 0) continue;
    parts.push(`<path d="M ${fmt(cx - r)} ${fmt(cy)} A ${fmt(r)} ${fmt(r)} ` +
      `0 0 1 ${fmt(cx + r)} ${fmt(cy)}" fill="none" stroke="#ccc" ` +
      `stroke-width="0.7"/>`);
    parts.push(`<text x="${fmt(cx + 4)}" y="${fmt(cy - r - 3)}" ` +
      `font-size="9" fill="#888" ${FONT}>${esc(tickLabel(ringDb))} dB</text>`);
  }
  for (let spoke = 0; spoke <= 180; spoke += 30) {
    const [sx, sy] = place(spoke, radius);
    parts.push(`<line x1="${fmt(cx)}" y1="${fmt(cy)}" x2="${fmt(sx)}" ` +
      `y2="${fmt(sy)}" stroke="#ccc" stroke-width="0.7"/>`);
    const [tx, ty] = place(spoke, radius + 16);
    parts.push(`<text x="${fmt(tx)}" y="${fmt(ty + 3.5)}" ` +
      `text-anchor="middle" font-size="10" ${FONT}>${spoke}&#176;</text>`);
  }
  parts.push(`<line x1="${fmt(cx - radius)}" y1="${fmt(cy)}" ` +
    `x2="${fmt(cx + radius)}" y2="${fmt(cy)}" stroke="#999" ` +
    `stroke-width="1"/>`);

  for (const series of names) {
    const own = points.filter((p) => p.series === series)
      .sort((a, b) => (a.x as number) - (b.x as number));
    if (own.length === 0) continue;
    const color = seriesColor(names, series);
    const path = own.map((p) => {
      const [x, y] = place(p.x as number, rOf(p.mean));
      return `${fmt(x)},${fmt(y)}`;
    }).join(" ");
    parts.push(`<polyline class="series" points="${path}" fill="none" ` +
      `stroke="${color}" stroke-width="1.2" opacity="0.85"/>`);
  }
  return svgDocument(width, height, parts.join("\n"));
}
