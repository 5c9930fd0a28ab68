/**
 * Box statistics with the same quartile convention the harness prints
 * (Tukey hinges: the median of each half of the sorted data, with the middle
 * element included in both halves when the count is odd), so drawn boxes and
 * printed summaries agree.
 */

export class EmptyGroupError extends Error {}

export interface BoxStats {
  min: number;
  q1: number;
  median: number;
  q3: number;
  max: number;
  count: number;
}

function medianOfSorted(xs: number[]): number {
  const n = xs.length;
  const mid = n >> 1;
  return n % 2 === 1 ? xs[mid] : (xs[mid - 1] + xs[mid]) / 2;
}

export function tukeyQuartiles(
  values: number[],
): [number, number, number] {
  if (values.length === 0) {
    throw new EmptyGroupError("quartiles of an empty group");
  }
  const xs = [...values].sort((a, b) => a - b);
  const n = xs.length;
  const half = Math.ceil(n / 2);
  return [
    medianOfSorted(xs.slice(0, half)),
    medianOfSorted(xs),
    medianOfSorted(xs.slice(n - half)),
  ];
}

export function boxStats(values: number[]): BoxStats {
  const [q1, median, q3] = tukeyQuartiles(values);
  return {
    min: Math.min(...values),
    q1,
    median,
    q3,
    max: Math.max(...values),
    count: values.length,
  };
}
