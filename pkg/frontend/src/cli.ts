#!/usr/bin/env node
/**
 * Command line entry: `ris-render --spec figure.json [--dry-run]`.
 *
 * Exit codes: 0 success, 1 bad spec or bad input data, 2 unexpected
 * runtime failure.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { render } from "./render.js";
import { parseSpec, SpecError } from "./spec.js";

export async function main(argv: string[]): Promise<number> {
  let args;
  try {
    args = parseArgs({
      args: argv,
      options: {
        spec: { type: "string" },
        "dry-run": { type: "boolean", default: false },
        help: { type: "boolean", short: "h", default: false },
      },
      allowPositionals: false,
    });
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
  if (args.values.help) {
    process.stdout.write(
      "usage: ris-render --spec figure.json [--dry-run]\n");
    return 0;
  }
  const specPath = args.values.spec;
  if (!specPath) {
    process.stderr.write("error: --spec is required\n");
    return 1;
  }

  try {
    let raw: string;
    try {
      raw = fs.readFileSync(specPath, "utf8");
    } catch (err) {
      throw new SpecError(
        `cannot read spec file '${specPath}': ${(err as Error).message}`);
    }
    let doc: unknown;
    try {
      doc = JSON.parse(raw);
    } catch (err) {
      throw new SpecError(
        `spec file '${specPath}' is not valid JSON: ${(err as Error).message}`);
    }
    const spec = parseSpec(doc);
    const result = await render(spec, path.dirname(path.resolve(specPath)),
      args.values["dry-run"]);
    process.stdout.write(result.table + "\n");
    for (const out of result.outputs) {
      process.stdout.write(`wrote ${out}\n`);
    }
    return 0;
  } catch (err) {
    if (err instanceof SpecError) {
      process.stderr.write(`error: ${err.message}\n`);
      return 1;
    }
    process.stderr.write(`internal error: ${(err as Error).stack}\n`);
    return 2;
  }
}

let invokedDirectly = false;
if (process.argv[1]) {
  try {
    // realpath so the check survives npm's bin symlinks.
    invokedDirectly = import.meta.url ===
      pathToFileURL(fs.realpathSync(path.resolve(process.argv[1]))).href;
  } catch {
    invokedDirectly = false;
  }
}
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
