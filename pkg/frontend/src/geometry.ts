/**
 * Pure chart geometry: scales and SVG path strings derived from service data.
 * No numbers shown to the user are produced here; these functions only map
 * service values onto drawing coordinates.
 */

import { BandRow, FrontierPoint } from "./api.js";

export interface Scale {
  (value: number): number;
}

export interface ViewBox {
  width: number;
  height: number;
  margin: number;
}

export function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  return (value: number) => r0 + ((value - d0) / span) * (r1 - r0);
}

export function logScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const lo = Math.log10(Math.max(d0, 1e-300));
  const hi = Math.log10(Math.max(d1, 1e-300));
  const inner = linearScale(lo, hi, r0, r1);
  return (value: number) => inner(Math.log10(Math.max(value, 1e-300)));
}

export interface ChartFrame {
  x: Scale;
  y: Scale;
  xDomain: [number, number];
  yDomain: [number, number];
}

/** Fit both axes around the frontier curve and the band envelope, with padding. */
export function frameFor(
  frontier: FrontierPoint[],
  band: BandRow[] | null,
  box: ViewBox,
  logAxes = false,
): ChartFrame {
  const xs: number[] = frontier.map((p) => p.risk_r);
  const ys: number[] = frontier.map((p) => p.risk_b);
  for (const row of band ?? []) {
    xs.push(row.q05_r, row.q95_r);
    ys.push(row.q05_b, row.q95_b);
  }
  let x0 = Math.min(...xs);
  let x1 = Math.max(...xs);
  let y0 = Math.min(...ys);
  let y1 = Math.max(...ys);
  const padX = (x1 - x0 || Math.abs(x0) || 1) * 0.08;
  const padY = (y1 - y0 || Math.abs(y0) || 1) * 0.08;
  x0 -= padX;
  x1 += padX;
  y0 -= padY;
  y1 += padY;
  const make = logAxes ? logScale : linearScale;
  return {
    x: make(x0, x1, box.margin, box.width - box.margin),
    y: make(y0, y1, box.height - box.margin, box.margin),
    xDomain: [x0, x1],
    yDomain: [y0, y1],
  };
}

export function polylinePath(points: Array<[number, number]>, frame: ChartFrame): string {
  return points
    .map(([x, y], i) => `${i === 0 ? "M" : "L"}${frame.x(x).toFixed(2)},${frame.y(y).toFixed(2)}`)
    .join(" ");
}

export function frontierPath(frontier: FrontierPoint[], frame: ChartFrame): string {
  return polylinePath(frontier.map((p) => [p.risk_r, p.risk_b]), frame);
}

/** Closed region between the 5% and 95% quantile curves of the band. */
export function bandAreaPath(band: BandRow[], frame: ChartFrame): string {
  if (band.length === 0) {
    return "";
  }
  const upper = polylinePath(band.map((r) => [r.q05_r, r.q05_b]), frame);
  const lowerPoints: Array<[number, number]> = band.map(
    (r) => [r.q95_r, r.q95_b] as [number, number],
  );
  lowerPoints.reverse();
  const lower = lowerPoints
    .map(([x, y]) => `L${frame.x(x).toFixed(2)},${frame.y(y).toFixed(2)}`)
    .join(" ");
  return `${upper} ${lower} Z`;
}

/**
 * Tangent line lam*x + (1-lam)*y = c through the selected frontier point,
 * clipped to the chart frame.
 */
export function tangentSegment(
  point: FrontierPoint,
  frame: ChartFrame,
): { x1: number; y1: number; x2: number; y2: number } | null {
  const lam = point.lambda;
  const c = lam * point.risk_r + (1 - lam) * point.risk_b;
  const [x0, x1] = frame.xDomain;
  const [y0, y1] = frame.yDomain;
  const candidates: Array<[number, number]> = [];
  if (lam === 0) {
    candidates.push([x0, c], [x1, c]); // horizontal line y = c
  } else if (lam === 1) {
    candidates.push([c, y0], [c, y1]); // vertical line x = c
  } else {
    for (const x of [x0, x1]) {
      const y = (c - lam * x) / (1 - lam);
      if (y >= Math.min(y0, y1) && y <= Math.max(y0, y1)) {
        candidates.push([x, y]);
      }
    }
    for (const y of [y0, y1]) {
      const x = (c - (1 - lam) * y) / lam;
      if (x >= Math.min(x0, x1) && x <= Math.max(x0, x1)) {
        candidates.push([x, y]);
      }
    }
  }
  if (candidates.length < 2) {
    return null;
  }
  const [a, b] = [candidates[0]!, candidates[candidates.length - 1]!];
  return { x1: frame.x(a[0]), y1: frame.y(a[1]), x2: frame.x(b[0]), y2: frame.y(b[1]) };
}

/**
 * Displacement arrows from the population point to the band median:
 * a horizontal red-risk shift then a vertical blue-risk shift.
 */
export function displacementPaths(row: BandRow, frame: ChartFrame): { horizontal: string; vertical: string } {
  const x0 = frame.x(row.pop_risk_r);
  const y0 = frame.y(row.pop_risk_b);
  const x1 = frame.x(row.q50_r);
  const y1 = frame.y(row.q50_b);
  return {
    horizontal: `M${x0.toFixed(2)},${y0.toFixed(2)} L${x1.toFixed(2)},${y0.toFixed(2)}`,
    vertical: `M${x1.toFixed(2)},${y0.toFixed(2)} L${x1.toFixed(2)},${y1.toFixed(2)}`,
  };
}
