import { describe, expect, it } from "vitest";

import { boxStats, EmptyGroupError, tukeyQuartiles } from "../src/stats.js";

describe("tukeyQuartiles", () => {
  // oracle triples shared with the harness summary convention
  it("matches the inclusive-median hinge values", () => {
    expect(tukeyQuartiles([1, 2, 3, 4])).toEqual([1.5, 2.5, 3.5]);
    expect(tukeyQuartiles([1, 2, 3, 4, 5])).toEqual([2, 3, 4]);
    expect(tukeyQuartiles([1, 2, 3, 4, 5, 6])).toEqual([2, 3.5, 5]);
  });

  it("handles tiny groups", () => {
    expect(tukeyQuartiles([7])).toEqual([7, 7, 7]);
    expect(tukeyQuartiles([9, 3])).toEqual([3, 6, 9]);
  });

  it("sorts internally and leaves the input alone", () => {
    const xs = [5, 1, 4, 2, 3];
    expect(tukeyQuartiles(xs)).toEqual([2, 3, 4]);
    expect(xs).toEqual([5, 1, 4, 2, 3]);
  });

  it("refuses an empty group", () => {
    expect(() => tukeyQuartiles([])).toThrow(EmptyGroupError);
  });
});

describe("boxStats", () => {
  it("carries extremes and count alongside the hinges", () => {
    const st = boxStats([4, 1, 3, 2]);
    expect(st).toEqual({
      min: 1,
      q1: 1.5,
      median: 2.5,
      q3: 3.5,
      max: 4,
      count: 4,
    });
  });
});
