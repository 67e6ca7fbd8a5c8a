/**
 * Trajectory capture math, kept free of DOM types so it is unit-testable.
 *
 * The player draws over a fixed wall-clock window (the simulation time
 * T_CSL ~ 0.1 is far below human reaction time, so the game runs slowed
 * down); the drawn span is rescaled linearly onto [0, T] and resampled
 * to uniform steps before submission.
 */

import type { DrawnTrajectory, RawSample } from "./types.js";

export const MIN_SAMPLES = 10;
export const CAPTURE_WINDOW_MS = 5000;

export function clamp(x: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, x));
}

/** Linear interpolation of tabulated samples, constant beyond the ends. */
export function interpolate(ts: number[], xs: number[], t: number): number {
  if (t <= ts[0]) return xs[0];
  if (t >= ts[ts.length - 1]) return xs[xs.length - 1];
  let i = 1;
  while (ts[i] < t) i++;
  const w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
  return xs[i - 1] + w * (xs[i] - xs[i - 1]);
}

export class TooFewSamplesError extends Error {}

/**
 * Rescale a raw capture onto [0, T] and resample to nSteps + 1 uniform
 * points.  Positions are clamped to the tweezer range.
 */
export function resampleCapture(
  raw: RawSample[],
  duration: number,
  nSteps: number,
  xMin: number,
  xMax: number,
): DrawnTrajectory {
  if (raw.length < MIN_SAMPLES) {
    throw new TooFewSamplesError(
      `need at least ${MIN_SAMPLES} samples, got ${raw.length}`,
    );
  }
  const t0 = raw[0].tWall;
  const t1 = raw[raw.length - 1].tWall;
  if (!(t1 > t0)) {
    throw new TooFewSamplesError("capture spans zero wall-clock time");
  }
  const ts: number[] = [];
  const xs: number[] = [];
  for (const s of raw) {
    const t = ((s.tWall - t0) / (t1 - t0)) * duration;
    if (ts.length > 0 && t <= ts[ts.length - 1]) continue; // drop ties
    ts.push(t);
    xs.push(clamp(s.x, xMin, xMax));
  }
  if (ts.length < 2) {
    throw new TooFewSamplesError("capture collapsed to a single instant");
  }
  const samples: [number, number][] = [];
  for (let i = 0; i <= nSteps; i++) {
    const t = (i / nSteps) * duration;
    samples.push([t, interpolate(ts, xs, t)]);
  }
  return { duration, samples };
}

/** Map a canvas pixel x onto the tweezer coordinate. */
export function pixelToPosition(
  px: number,
  canvasWidth: number,
  xMin: number,
  xMax: number,
): number {
  return clamp(xMin + (px / canvasWidth) * (xMax - xMin), xMin, xMax);
}

export function supNormDistance(
  a: DrawnTrajectory,
  reference: (t: number) => number,
): number {
  let worst = 0;
  for (const [t, x] of a.samples) {
    worst = Math.max(worst, Math.abs(x - reference(t)));
  }
  return worst;
}
