/**
 * Integration round-trip against the real transport service: start the
 * Python server on a reduced grid, fetch a reference protocol, replay it
 * through the client the same way the game does, and compare with the
 * published fidelity.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { orderScores } from "../src/session.js";
import { resampleCapture } from "../src/trajectory.js";
import type { RawSample } from "../src/types.js";

const PORT = 8765 + Math.floor(Math.random() * 200);
const BASE = `http://127.0.0.1:${PORT}`;
let server: ChildProcess;

async function waitForServer(timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${BASE}/api/config`);
      if (res.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 300));
  }
  throw new Error("transport service did not come up");
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "qmoves-ui-"));
  const cfgPath = join(dir, "config.json");
  writeFileSync(
    cfgPath,
    JSON.stringify({
      n_grid: 128,
      grid_min: -1.5,
      grid_max: 1.5,
      x0_start: 0.2,
      x0_end: -0.2,
    }),
  );
  server = spawn(
    "python3",
    [
      "-m", "qmoves.cli", "serve",
      "--port", String(PORT),
      "--config", cfgPath,
      "--state-dir", join(dir, "state"),
    ],
    { stdio: "ignore" },
  );
  await waitForServer();
}, 90_000);

afterAll(() => {
  server?.kill();
});

describe("service round trip", () => {
  const client = new ApiClient(BASE);

  it("replaying a fetched reference protocol returns its published fidelity", async () => {
    const ref = await client.getReference("cd_single", 0.06);
    const replay = await client.simulate(
      { duration: ref.T, samples: ref.samples },
      false,
    );
    expect(Math.abs(replay.fidelity - ref.fidelity)).toBeLessThan(1e-6);
  }, 60_000);

  it("a captured drag survives the full submit pipeline", async () => {
    const cfg = await client.getConfig();
    const raw: RawSample[] = [];
    for (let i = 0; i <= 120; i++) {
      raw.push({ tWall: i * 40, x: 0.2 - (0.4 * i) / 120 });
    }
    const traj = resampleCapture(
      raw, 0.06, 80, cfg.lattice.x_min, cfg.lattice.x_max,
    );
    const result = await client.simulate(traj, true);
    expect(result.fidelity).toBeGreaterThanOrEqual(0);
    expect(result.fidelity).toBeLessThanOrEqual(1);
    expect(result.frames!.length).toBeGreaterThan(2);
    // deterministic replay
    const again = await client.simulate(traj, false);
    expect(again.fidelity).toBe(result.fidelity);
  }, 60_000);

  it("leaderboard returns entries sorted by fidelity descending", async () => {
    const hold: [number, number][] = [[0, 0.2], [0.06, 0.2]];
    const drag: [number, number][] = [[0, 0.2], [0.06, -0.2]];
    await client.submitScore("holder", { duration: 0.06, samples: hold });
    await client.submitScore("dragger", { duration: 0.06, samples: drag });
    const { scores } = await client.getScores(0.06);
    expect(scores.length).toBeGreaterThanOrEqual(2);
    const fids = scores.map((s) => s.fidelity);
    const sorted = [...fids].sort((a, b) => b - a);
    expect(fids).toEqual(sorted);
    expect(orderScores(scores).map((s) => s.fidelity)).toEqual(sorted);
  }, 60_000);
});
