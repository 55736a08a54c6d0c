import { describe, expect, it } from "vitest";

import { parseSpec, SpecError, yColumns, yLabels } from "../src/spec.js";

const MINIMAL = {
  input: "data.csv",
  kind: "line",
  x: "n",
  y: "p",
};

describe("parseSpec", () => {
  it("accepts a minimal line spec", () => {
    const spec = parseSpec(MINIMAL);
    expect(spec.kind).toBe("line");
    expect(yColumns(spec)).toEqual(["p"]);
    expect(yLabels(spec)).toEqual(["p"]);
  });

  it("rejects non-objects and unknown fields", () => {
    expect(() => parseSpec(null)).toThrow(SpecError);
    expect(() => parseSpec([1])).toThrow(SpecError);
    expect(() => parseSpec({ ...MINIMAL, colour: "red" }))
      .toThrow(/unknown spec field 'colour'/);
  });

  it("rejects bad kinds and missing axes", () => {
    expect(() => parseSpec({ ...MINIMAL, kind: "pie" }))
      .toThrow(/'kind' must be one of/);
    expect(() => parseSpec({ ...MINIMAL, x: 7 }))
      .toThrow(/'x' must name a column/);
    expect(() => parseSpec({ ...MINIMAL, y: [] }))
      .toThrow(/'y' must not be empty/);
  });

  it("allows a y list only for multi-panel figures", () => {
    expect(() => parseSpec({ ...MINIMAL, y: ["a", "b"] }))
      .toThrow(/'line' figures take a single 'y' column/);
    const spec = parseSpec({ ...MINIMAL, kind: "multi-panel", y: ["a", "b"] });
    expect(yColumns(spec)).toEqual(["a", "b"]);
  });

  it("allows a sector only for pattern-polar figures", () => {
    expect(() => parseSpec({ ...MINIMAL, sector: [45, 135] }))
      .toThrow(/'sector' applies only to pattern-polar/);
    expect(() => parseSpec({
      ...MINIMAL, kind: "pattern-polar", sector: [45],
    })).toThrow(/'sector' must be \[lowDeg, highDeg\]/);
    const spec = parseSpec({
      ...MINIMAL, kind: "pattern-polar", sector: [45, 135],
    });
    expect(spec.sector).toEqual([45, 135]);
  });

  it("pads missing per-panel labels with column names", () => {
    const spec = parseSpec({
      ...MINIMAL, kind: "multi-panel", y: ["a", "b"], yLabel: ["A label"],
    });
    expect(yLabels(spec)).toEqual(["A label", "b"]);
  });
});
