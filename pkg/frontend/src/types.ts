export interface ServerConfig {
  amp_moving: number;
  amp_static: number;
  sigma: number;
  x_static: number;
  grid_min: number;
  grid_max: number;
  x0_start: number;
  x0_end: number;
  t_csl: number;
  lattice: { x_min: number; x_max: number; m: number; spacing: number };
  t_presets: number[];
}

export interface ProtocolPayload {
  T: number;
  samples: [number, number][];
  kind: string;
}

export interface ReferenceResponse extends ProtocolPayload {
  fidelity: number;
}

export interface Frame {
  t: number;
  density: number[];
}

export interface SimulateResponse {
  fidelity: number;
  frames?: Frame[];
  x?: number[];
}

export interface ScoreEntry {
  name: string;
  T: number;
  fidelity: number;
  source: string;
  ts: number;
}

/** Raw pointer/keyboard capture: wall-clock ms plus tweezer position. */
export interface RawSample {
  tWall: number;
  x: number;
}

/** Uniformly resampled trajectory ready for submission. */
export interface DrawnTrajectory {
  duration: number;
  samples: [number, number][];
}
