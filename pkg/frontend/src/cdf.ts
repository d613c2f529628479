/** Empirical distribution function of a sample. */

export interface Cdf {
  /** Sorted sample values. */
  x: number[];
  /** P(X <= x[i]) = (i + 1) / n, nondecreasing, ending at 1. */
  y: number[];
}

export function empiricalCdf(values: number[]): Cdf {
  if (values.length === 0) {
    throw new Error("empirical CDF of an empty sample");
  }
  const x = [...values].sort((a, b) => a - b);
  const n = x.length;
  const y = x.map((_, i) => (i + 1) / n);
  return { x, y };
}
