/**
 * Exact rationals for presentation math.
 *
 * The backend sends every vector component as an exact decimal or fraction
 * string ("151", "6.6", "1/3"). The UI never recomputes verdicts or
 * impacts; it only needs exact comparisons and bar proportions, so values
 * are parsed into bigint numerator/denominator pairs and floats appear
 * solely as rendered bar widths.
 */

export interface Rat {
  num: bigint;
  den: bigint;
}

export function parseRat(text: string): Rat {
  const s = text.trim();
  const frac = s.match(/^(-?\d+)\s*\/\s*(\d+)$/);
  if (frac) {
    const den = BigInt(frac[2]!);
    if (den === 0n) throw new Error(`zero denominator in ${text}`);
    return normalize({ num: BigInt(frac[1]!), den });
  }
  const dec = s.match(/^(-?)(\d+)(?:\.(\d+))?$/);
  if (!dec) throw new Error(`not a rational literal: ${text}`);
  const sign = dec[1] === "-" ? -1n : 1n;
  const whole = dec[2]!;
  const fracDigits = dec[3] ?? "";
  const den = 10n ** BigInt(fracDigits.length);
  const num = sign * (BigInt(whole) * den + BigInt(fracDigits || "0"));
  return normalize({ num, den });
}

function gcd(a: bigint, b: bigint): bigint {
  a = a < 0n ? -a : a;
  while (b) {
    [a, b] = [b, a % b];
  }
  return a;
}

function normalize(r: Rat): Rat {
  const g = gcd(r.num, r.den) || 1n;
  return { num: r.num / g, den: r.den / g };
}

export function ratLeq(a: Rat, b: Rat): boolean {
  return a.num * b.den <= b.num * a.den;
}

export function ratEq(a: Rat, b: Rat): boolean {
  return a.num * b.den === b.num * a.den;
}

/** a/b as a clamped percentage for bar widths; purely presentational. */
export function ratioPercent(a: Rat, b: Rat): number {
  if (b.num === 0n) return a.num === 0n ? 0 : 100;
  const pct = (Number(a.num) * Number(b.den)) / (Number(b.num) * Number(a.den)) * 100;
  if (!isFinite(pct)) return 100;
  return Math.max(0, Math.min(100, pct));
}

/** Componentwise <=, over the backend's exact string encoding. */
export function vecLeq(a: string[], b: string[]): boolean {
  if (a.length !== b.length) return false;
  return a.every((x, i) => ratLeq(parseRat(x), parseRat(b[i]!)));
}
