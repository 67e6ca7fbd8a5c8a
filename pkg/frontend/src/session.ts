/** Play-session state: attempts, best score, fetched baselines. */

import type { Frame, ReferenceResponse, ScoreEntry } from "./types.js";

export const BASELINE_KINDS = ["cd_double", "geodesic", "optimized"] as const;

export interface Attempt {
  fidelity: number;
  frames: Frame[];
}

export class PlaySession {
  duration: number;
  bestFidelity = 0;
  lastAttempt: Attempt | null = null;
  baselines = new Map<string, ReferenceResponse>();

  constructor(duration: number) {
    this.duration = duration;
  }

  recordAttempt(fidelity: number, frames: Frame[]): Attempt {
    // best fidelity never decreases within a session
    this.bestFidelity = Math.max(this.bestFidelity, fidelity);
    this.lastAttempt = { fidelity, frames };
    return this.lastAttempt;
  }
}

/** Leaderboard rows ordered by fidelity descending (stable for ties). */
export function orderScores(entries: ScoreEntry[]): ScoreEntry[] {
  return [...entries].sort((a, b) => b.fidelity - a.fidelity);
}
