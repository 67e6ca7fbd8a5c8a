/**
 * Round lifecycle: capture the player's tweezer steering over a fixed
 * 5-second window, submit it for simulation, replay the returned
 * density frames, and keep score against the algorithmic baselines.
 */

import { ApiClient, ApiError } from "./api.js";
import { GameRenderer } from "./render.js";
import { BASELINE_KINDS, PlaySession, orderScores } from "./session.js";
import {
  CAPTURE_WINDOW_MS,
  pixelToPosition,
  resampleCapture,
  TooFewSamplesError,
} from "./trajectory.js";
import type { DrawnTrajectory, RawSample, ServerConfig } from "./types.js";

const SUBMIT_STEPS = 120;
const KEYBOARD_SPEED = 1.6; // tweezer units per second, arrow-key fallback
const FRAME_MS = 33;

interface Elements {
  canvas: HTMLCanvasElement;
  presetSelect: HTMLSelectElement;
  startButton: HTMLButtonElement;
  status: HTMLElement;
  scoreBox: HTMLElement;
  baselineBox: HTMLElement;
  leaderboard: HTMLElement;
  nameInput: HTMLInputElement;
  submitScore: HTMLButtonElement;
}

export class Game {
  private cfg!: ServerConfig;
  private session!: PlaySession;
  private renderer!: GameRenderer;
  private capture: RawSample[] = [];
  private capturing = false;
  private cursorX = 0;
  private keyVelocity = 0;
  private lastTrajectory: DrawnTrajectory | null = null;

  constructor(
    private el: Elements,
    private api: ApiClient = new ApiClient(),
  ) {}

  async start(): Promise<void> {
    this.cfg = await this.api.getConfig();
    for (const t of this.cfg.t_presets) {
      const opt = document.createElement("option");
      opt.value = String(t);
      opt.textContent = `T = ${t.toFixed(2)}  (${(t / this.cfg.t_csl).toFixed(1)} x T_CSL)`;
      if (Math.abs(t - 0.12) < 1e-9) opt.selected = true;
      this.el.presetSelect.appendChild(opt);
    }
    this.renderer = new GameRenderer(this.el.canvas, this.cfg);
    this.cursorX = this.cfg.x0_start;
    this.renderer.drawScene(this.cursorX);
    this.newSession();

    this.el.startButton.addEventListener("click", () => this.playRound());
    this.el.presetSelect.addEventListener("change", () => this.newSession());
    this.el.submitScore.addEventListener("click", () => this.sendScore());
    this.el.canvas.addEventListener("pointermove", (ev) => {
      const rect = this.el.canvas.getBoundingClientRect();
      const px = ((ev.clientX - rect.left) / rect.width) * this.el.canvas.width;
      this.cursorX = pixelToPosition(
        px, this.el.canvas.width, this.cfg.lattice.x_min, this.cfg.lattice.x_max,
      );
      if (!this.capturing) this.renderer.drawScene(this.cursorX);
    });
    window.addEventListener("keydown", (ev) => {
      if (ev.key === "ArrowLeft") this.keyVelocity = -KEYBOARD_SPEED;
      if (ev.key === "ArrowRight") this.keyVelocity = KEYBOARD_SPEED;
    });
    window.addEventListener("keyup", (ev) => {
      if (ev.key === "ArrowLeft" || ev.key === "ArrowRight") this.keyVelocity = 0;
    });
    this.setStatus("move the tweezer to the atom, then bring it home: press start");
    await this.refreshLeaderboard();
  }

  private get duration(): number {
    return Number(this.el.presetSelect.value);
  }

  private newSession(): void {
    this.session = new PlaySession(this.duration);
    this.el.scoreBox.textContent = "";
    void this.loadBaselines();
    void this.refreshLeaderboard();
  }

  private setStatus(text: string, isError = false): void {
    this.el.status.textContent = text;
    this.el.status.classList.toggle("error", isError);
  }

  private async loadBaselines(): Promise<void> {
    this.el.baselineBox.textContent = "baselines: computing...";
    const parts: string[] = [];
    for (const kind of BASELINE_KINDS) {
      try {
        const ref = await this.api.getReference(kind, this.duration);
        this.session.baselines.set(kind, ref);
        parts.push(`${kind}: ${ref.fidelity.toFixed(4)}`);
        this.el.baselineBox.textContent = `baselines -- ${parts.join("   ")}`;
      } catch (err) {
        parts.push(`${kind}: unavailable`);
      }
    }
    this.el.baselineBox.textContent = `baselines -- ${parts.join("   ")}`;
  }

  private playRound(): void {
    if (this.capturing) return;
    this.capture = [];
    this.capturing = true;
    this.el.startButton.disabled = true;
    const began = performance.now();
    const tick = () => {
      const now = performance.now();
      const remaining = CAPTURE_WINDOW_MS - (now - began);
      if (this.keyVelocity !== 0) {
        this.cursorX += (this.keyVelocity * FRAME_MS) / 1000;
        this.cursorX = Math.min(
          this.cfg.lattice.x_max, Math.max(this.cfg.lattice.x_min, this.cursorX),
        );
      }
      this.capture.push({ tWall: now, x: this.cursorX });
      this.renderer.drawScene(this.cursorX);
      this.setStatus(`steering... ${(remaining / 1000).toFixed(1)} s left`);
      if (remaining > 0 && this.capturing) {
        setTimeout(tick, FRAME_MS);
      } else {
        this.capturing = false;
        this.el.startButton.disabled = false;
        void this.finishRound();
      }
    };
    tick();
  }

  private async finishRound(): Promise<void> {
    let trajectory: DrawnTrajectory;
    try {
      trajectory = resampleCapture(
        this.capture, this.duration, SUBMIT_STEPS,
        this.cfg.lattice.x_min, this.cfg.lattice.x_max,
      );
    } catch (err) {
      if (err instanceof TooFewSamplesError) {
        this.setStatus("too few samples captured; try again", true);
        return;
      }
      throw err;
    }
    this.lastTrajectory = trajectory;
    this.setStatus("simulating...");
    try {
      const result = await this.api.simulate(trajectory, true);
      const attempt = this.session.recordAttempt(result.fidelity, result.frames ?? []);
      this.showScore(result.fidelity);
      if (result.frames && result.x) await this.animate(result.frames, result.x);
      void attempt;
    } catch (err) {
      const reason = err instanceof ApiError ? `${err.status}: ${err.message}` : String(err);
      this.setStatus(`simulation failed (${reason}) -- retry`, true);
    }
  }

  private showScore(fidelity: number): void {
    this.el.scoreBox.textContent =
      `fidelity ${fidelity.toFixed(4)}   best this session ${this.session.bestFidelity.toFixed(4)}`;
    this.setStatus("done -- submit to the leaderboard or try again");
  }

  private async animate(frames: { t: number; density: number[] }[], xs: number[]): Promise<void> {
    for (const frame of frames) {
      const x0 = this.frameTweezerPosition(frame.t);
      this.renderer.drawScene(x0);
      this.renderer.drawDensity(frame, xs);
      await new Promise((r) => setTimeout(r, FRAME_MS));
    }
  }

  private frameTweezerPosition(t: number): number {
    const traj = this.lastTrajectory;
    if (!traj) return this.cursorX;
    let prev = traj.samples[0][1];
    for (const [ts, x] of traj.samples) {
      if (ts > t) break;
      prev = x;
    }
    return prev;
  }

  private async sendScore(): Promise<void> {
    if (!this.lastTrajectory) {
      this.setStatus("play a round first", true);
      return;
    }
    const name = this.el.nameInput.value.trim() || "anonymous";
    try {
      await this.api.submitScore(name.slice(0, 32), this.lastTrajectory);
      await this.refreshLeaderboard();
      this.setStatus("score submitted");
    } catch (err) {
      const reason = err instanceof ApiError ? `${err.status}: ${err.message}` : String(err);
      this.setStatus(`submission failed (${reason}) -- retry`, true);
    }
  }

  private async refreshLeaderboard(): Promise<void> {
    try {
      const { scores } = await this.api.getScores(this.duration);
      const rows = orderScores(scores).slice(0, 12);
      this.el.leaderboard.innerHTML = "";
      for (const entry of rows) {
        const li = document.createElement("li");
        li.textContent = `${entry.fidelity.toFixed(4)}  ${entry.name} [${entry.source}]`;
        this.el.leaderboard.appendChild(li);
      }
    } catch {
      /* leaderboard is best-effort */
    }
  }
}
