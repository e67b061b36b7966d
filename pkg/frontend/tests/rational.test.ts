import { describe, expect, it } from "vitest";

import { parseRat, ratEq, ratLeq, ratioPercent, vecLeq } from "../src/rational.js";

describe("exact rational parsing", () => {
  it("parses integers, decimals and fractions", () => {
    expect(parseRat("151")).toEqual({ num: 151n, den: 1n });
    expect(parseRat("6.6")).toEqual({ num: 33n, den: 5n });
    expect(parseRat("1/3")).toEqual({ num: 1n, den: 3n });
    expect(parseRat("0.2")).toEqual({ num: 1n, den: 5n });
  });

  it("decimal and fraction forms of the same value are equal", () => {
    expect(ratEq(parseRat("6.6"), parseRat("33/5"))).toBe(true);
    expect(ratEq(parseRat("0.5"), parseRat("1/2"))).toBe(true);
  });

  it("rejects junk", () => {
    expect(() => parseRat("abc")).toThrow();
    expect(() => parseRat("1/0")).toThrow();
  });

  it("compares exactly at boundaries", () => {
    expect(ratLeq(parseRat("6.6"), parseRat("6.6"))).toBe(true);
    expect(ratLeq(parseRat("6.6"), parseRat("33/5"))).toBe(true);
    expect(ratLeq(parseRat("6.600000001"), parseRat("6.6"))).toBe(false);
  });

  it("componentwise comparison over backend strings", () => {
    expect(vecLeq(["151", "6.6"], ["155", "7.5"])).toBe(true);
    expect(vecLeq(["151", "6.6"], ["150", "7.5"])).toBe(false);
    expect(vecLeq(["151"], ["155", "7.5"])).toBe(false);
  });

  it("bar ratio is clamped presentation math", () => {
    expect(ratioPercent(parseRat("151"), parseRat("155"))).toBeCloseTo(97.4, 1);
    expect(ratioPercent(parseRat("10"), parseRat("5"))).toBe(100);
    expect(ratioPercent(parseRat("0"), parseRat("0"))).toBe(0);
  });
});
