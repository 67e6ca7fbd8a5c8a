/**
 * Thin typed client for the transport service.  All physics numbers the
 * UI ever displays come from these responses; nothing is computed here.
 */

import type {
  DrawnTrajectory,
  ReferenceResponse,
  ScoreEntry,
  ServerConfig,
  SimulateResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(fetcher: typeof fetch, url: string, init?: RequestInit): Promise<T> {
  const res = await fetcher(url, init);
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = await res.json();
      detail = JSON.stringify(body.detail ?? body);
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(res.status, detail);
  }
  return (await res.json()) as T;
}

export class ApiClient {
  constructor(
    private base = "",
    private fetcher: typeof fetch = fetch,
  ) {}

  getConfig(): Promise<ServerConfig> {
    return request(this.fetcher, `${this.base}/api/config`);
  }

  getReference(kind: string, duration: number): Promise<ReferenceResponse> {
    const q = new URLSearchParams({ kind, T: String(duration) });
    return request(this.fetcher, `${this.base}/api/reference?${q}`);
  }

  simulate(traj: DrawnTrajectory, frames: boolean): Promise<SimulateResponse> {
    return request(this.fetcher, `${this.base}/api/simulate`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ T: traj.duration, samples: traj.samples, frames }),
    });
  }

  submitScore(name: string, traj: DrawnTrajectory): Promise<ScoreEntry> {
    return request(this.fetcher, `${this.base}/api/scores`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        name,
        T: traj.duration,
        protocol: { T: traj.duration, samples: traj.samples, kind: "human" },
        source: "human",
      }),
    });
  }

  getScores(duration?: number): Promise<{ scores: ScoreEntry[] }> {
    const q = duration !== undefined ? `?T=${duration}` : "";
    return request(this.fetcher, `${this.base}/api/scores${q}`);
  }
}
