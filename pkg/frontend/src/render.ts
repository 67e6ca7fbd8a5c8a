/**
 * Canvas rendering: static potential outline, target-region shading,
 * the tweezer cursor, and the density "liquid" filled under its curve.
 * Only presentation happens here; every number shown comes from the
 * server.
 */

import type { Frame, ServerConfig } from "./types.js";

export interface ViewBox {
  width: number;
  height: number;
  xMin: number;
  xMax: number;
}

export function xToPx(view: ViewBox, x: number): number {
  return ((x - view.xMin) / (view.xMax - view.xMin)) * view.width;
}

function potential(cfg: ServerConfig, x: number, x0: number): number {
  const s2 = 2 * cfg.sigma * cfg.sigma;
  return (
    -cfg.amp_moving * Math.exp(-((x - x0) ** 2) / s2) -
    cfg.amp_static * Math.exp(-((x - cfg.x_static) ** 2) / s2)
  );
}

export class GameRenderer {
  private ctx: CanvasRenderingContext2D;
  private view: ViewBox;

  constructor(
    private canvas: HTMLCanvasElement,
    private cfg: ServerConfig,
  ) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
    this.view = {
      width: canvas.width,
      height: canvas.height,
      xMin: cfg.grid_min,
      xMax: cfg.grid_max,
    };
  }

  private yFromPotential(v: number): number {
    const depth = this.cfg.amp_moving + this.cfg.amp_static;
    return this.view.height * (0.15 + 0.75 * (v / depth + 1));
  }

  /** Potential outline for the tweezer at x0 plus the target shading. */
  drawScene(x0: number): void {
    const { ctx, view } = this;
    ctx.clearRect(0, 0, view.width, view.height);

    ctx.fillStyle = "rgba(170, 120, 220, 0.15)";
    const tLeft = xToPx(view, this.cfg.x0_end - 2 * this.cfg.sigma);
    const tRight = xToPx(view, this.cfg.x0_end + 2 * this.cfg.sigma);
    ctx.fillRect(tLeft, 0, tRight - tLeft, view.height);

    ctx.strokeStyle = "#4a72b0";
    ctx.lineWidth = 2;
    ctx.beginPath();
    for (let px = 0; px <= view.width; px++) {
      const x = view.xMin + (px / view.width) * (view.xMax - view.xMin);
      const y = this.yFromPotential(potential(this.cfg, x, x0));
      if (px === 0) ctx.moveTo(px, y);
      else ctx.lineTo(px, y);
    }
    ctx.stroke();

    ctx.strokeStyle = "#2a4a80";
    ctx.beginPath();
    ctx.arc(xToPx(view, x0), 18, 9, 0, 2 * Math.PI);
    ctx.stroke();
  }

  /** Filled density curve ("the liquid") over the scene. */
  drawDensity(frame: Frame, xs: number[]): void {
    const { ctx, view } = this;
    let peak = 0;
    for (const d of frame.density) peak = Math.max(peak, d);
    if (peak <= 0) return;
    const base = view.height * 0.9;
    const span = view.height * 0.55;
    ctx.fillStyle = "rgba(150, 80, 200, 0.55)";
    ctx.beginPath();
    ctx.moveTo(xToPx(view, xs[0]), base);
    for (let i = 0; i < frame.density.length; i++) {
      ctx.lineTo(xToPx(view, xs[i]), base - (frame.density[i] / peak) * span);
    }
    ctx.lineTo(xToPx(view, xs[xs.length - 1]), base);
    ctx.closePath();
    ctx.fill();
  }
}
