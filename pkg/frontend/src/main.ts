import { Game } from "./game.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const game = new Game({
  canvas: el<HTMLCanvasElement>("scene"),
  presetSelect: el<HTMLSelectElement>("preset"),
  startButton: el<HTMLButtonElement>("start"),
  status: el("status"),
  scoreBox: el("score"),
  baselineBox: el("baselines"),
  leaderboard: el("leaderboard"),
  nameInput: el<HTMLInputElement>("player-name"),
  submitScore: el<HTMLButtonElement>("submit-score"),
});

game.start().catch((err) => {
  el("status").textContent = `failed to reach the service: ${err}`;
  el("status").classList.add("error");
});
