/**
 * CSV loading for harness output files.
 *
 * Every supported file carries a schema_version column; readers refuse
 * versions they do not understand so plot scripts fail loudly instead
 * of drawing stale columns.
 */

import { readFileSync } from "node:fs";
import Papa from "papaparse";
import { SpecError } from "./spec.js";

export const SUPPORTED_SCHEMA_VERSION = 1;

export type Cell = string | number;

export interface Table {
  columns: string[];
  rows: Record<string, Cell>[];
}

/** Columns that must stay strings even when they look numeric. */
const STRING_COLUMNS = new Set(["config_hash"]);

export function readCsv(path: string): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (err) {
    throw new SpecError(`cannot read CSV '${path}': ${(err as Error).message}`);
  }
  if (text.trim() === "") {
    throw new SpecError(`CSV '${path}' has no header row`);
  }
  const parsed = Papa.parse<Record<string, Cell>>(text, {
    header: true,
    skipEmptyLines: true,
    dynamicTyping: (field) => !STRING_COLUMNS.has(String(field)),
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new SpecError(
      `malformed CSV '${path}' row ${first.row}: ${first.message}`);
  }
  const columns = parsed.meta.fields ?? [];
  if (columns.length === 0) {
    throw new SpecError(`CSV '${path}' has no header row`);
  }
  return { columns, rows: parsed.data };
}

/** Read and concatenate one or more CSVs with identical headers. */
export function readInputs(paths: string[]): Table {
  const first = readCsv(paths[0]);
  for (const path of paths.slice(1)) {
    const next = readCsv(path);
    if (next.columns.join(",") !== first.columns.join(",")) {
      throw new SpecError(
        `CSV '${path}' header differs from '${paths[0]}'`);
    }
    first.rows.push(...next.rows);
  }
  return first;
}

export function checkSchemaVersion(table: Table): void {
  if (!table.columns.includes("schema_version")) {
    throw new SpecError(
      `CSV lacks a schema_version column; expected version ` +
      `${SUPPORTED_SCHEMA_VERSION}`);
  }
  for (const row of table.rows) {
    const version = row.schema_version;
    if (version !== SUPPORTED_SCHEMA_VERSION) {
      throw new SpecError(
        `unsupported schema_version ${version}; this renderer expects ` +
        `version ${SUPPORTED_SCHEMA_VERSION}`);
    }
  }
}

export function requireColumns(table: Table, needed: string[]): void {
  for (const column of needed) {
    if (!table.columns.includes(column)) {
      throw new SpecError(`CSV is missing column '${column}'`);
    }
  }
}
