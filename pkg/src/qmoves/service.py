"""HTTP service exposing simulation, reference protocols, and a leaderboard.

API
---
GET  /api/config                     active physics configuration
GET  /api/reference?kind=&T=         reference protocol + its fidelity
POST /api/simulate                   {T, samples, frames?} -> {fidelity, frames?, x}
POST /api/scores                     submit a protocol; fidelity is recomputed
                                     server-side, never taken from the client
GET  /api/scores?T=                  leaderboard, fidelity descending

Simulation failures return 422 with a machine-readable reason; when all
simulation slots are busy the service answers 429.  Scores are stored as
JSON lines through a single-writer lock so concurrent submissions never
interleave.
"""

from __future__ import annotations

import json
import math
import threading
import time
from importlib import resources as importlib_resources
from pathlib import Path

import jsonschema
import numpy as np
from fastapi import FastAPI, HTTPException, Query
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field
from referencing import Registry, Resource

from .config import PhysicsConfig
from .errors import ContractError, DomainError, NumericError, ResourceError
from .propagation import (
    PositionLattice,
    SpectralStore,
    default_n_rule,
    simulate_protocol,
)
from .protocols import Protocol, classical_speed_limit, default_metric_table, make_reference_protocol

T_PRESETS = (0.08, 0.10, 0.12, 0.15, 0.20, 0.30)
REFERENCE_KINDS = ("cubic", "cd_single", "geodesic", "cd_double", "optimized")
SCORE_SOURCES = ("human", "cd_single", "cd_double", "geodesic", "optimizer")


def _load_schemas() -> dict:
    out = {}
    base = importlib_resources.files("qmoves") / "schemas"
    for entry in base.iterdir():
        if entry.name.endswith(".schema.json"):
            schema = json.loads(entry.read_text())
            out[entry.name.replace(".schema.json", "")] = schema
    return out


_SCHEMAS = _load_schemas()
_REGISTRY = Registry().with_resources(
    [(s["$id"], Resource.from_contents(s)) for s in _SCHEMAS.values()]
)


def validate_payload(schema_name: str, payload) -> None:
    """Raise jsonschema.ValidationError if payload violates a shipped schema."""
    validator = jsonschema.Draft202012Validator(
        _SCHEMAS[schema_name], registry=_REGISTRY
    )
    validator.validate(payload)


class ScoreBoard:
    """Append-only JSON-lines store with a single-writer lock."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._last_ts = 0.0
        if self.path.exists():
            for entry in self._read():
                self._last_ts = max(self._last_ts, entry.get("ts", 0.0))

    def append(self, entry: dict) -> dict:
        with self._lock:
            ts = max(time.time(), self._last_ts)
            entry = dict(entry, ts=ts)
            self._last_ts = ts
            line = json.dumps(entry) + "\n"
            with open(self.path, "a") as fh:
                fh.write(line)
                fh.flush()
        return entry

    def _read(self) -> list:
        if not self.path.exists():
            return []
        entries = []
        for line in self.path.read_text().splitlines():
            line = line.strip()
            if line:
                entries.append(json.loads(line))
        return entries

    def listing(self, duration: float | None = None) -> list:
        entries = self._read()
        if duration is not None:
            entries = [
                e for e in entries
                if math.isclose(e["T"], duration, rel_tol=1e-9, abs_tol=1e-12)
            ]
        return sorted(entries, key=lambda e: -e["fidelity"])


class SimulateRequest(BaseModel):
    T: float = Field(gt=0)
    samples: list[tuple[float, float]] = Field(min_length=2)
    frames: bool = False


class ScoreSubmission(BaseModel):
    name: str = Field(min_length=1, max_length=32)
    T: float = Field(gt=0)
    fidelity: float | None = None  # advisory only; recomputed server-side
    protocol: dict
    source: str = "human"


def _error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"error": code, "message": message})


def create_app(
    cfg: PhysicsConfig | None = None,
    state_dir: Path | None = None,
    static_dir: Path | None = None,
    bank_budget_mb: float = 1024.0,
    max_concurrent: int = 4,
    reference_max_sweeps: int = 30,
) -> FastAPI:
    cfg = PhysicsConfig() if cfg is None else cfg
    state_dir = Path(state_dir) if state_dir is not None else Path("runs/service")
    state_dir.mkdir(parents=True, exist_ok=True)

    lattice = PositionLattice.default()
    store = SpectralStore(cfg, lattice, max_bytes=int(bank_budget_mb * 1e6))
    board = ScoreBoard(state_dir / "scores.jsonl")
    slots = threading.BoundedSemaphore(max_concurrent)
    reference_cache: dict = {}
    reference_lock = threading.Lock()

    app = FastAPI(title="qmoves transport service")
    app.state.cfg = cfg
    app.state.store = store
    app.state.board = board

    def run_simulation(protocol: Protocol, frames: bool):
        if not slots.acquire(blocking=False):
            raise _error(429, "overloaded", "all simulation slots are busy; retry")
        try:
            stride = 0
            if frames:
                stride = max(1, default_n_rule(protocol.duration) // 60)
            return simulate_protocol(
                protocol, cfg, lattice=lattice, frame_stride=stride, store=store
            )
        except (DomainError, ContractError) as exc:
            raise _error(422, "invalid_protocol", str(exc))
        except NumericError as exc:
            raise _error(422, "numeric_failure", str(exc))
        except ResourceError as exc:
            raise _error(422, "resource_limit", str(exc))
        finally:
            slots.release()

    @app.get("/api/config")
    def get_config():
        payload = cfg.to_dict()
        payload["t_csl"] = classical_speed_limit(cfg, cfg.transport_distance).t_csl_exact
        payload["lattice"] = {
            "x_min": lattice.x_min,
            "x_max": lattice.x_max,
            "m": lattice.m,
            "spacing": lattice.spacing,
        }
        payload["t_presets"] = list(T_PRESETS)
        return payload

    @app.get("/api/reference")
    def get_reference(kind: str = Query(...), T: float = Query(..., gt=0)):
        if kind not in REFERENCE_KINDS:
            raise _error(422, "unknown_kind", f"kind must be one of {REFERENCE_KINDS}")
        key = (kind, round(T, 12))
        with reference_lock:
            if key in reference_cache:
                return reference_cache[key]
        try:
            if kind == "optimized":
                protocol, fid = _optimized_reference(T)
            else:
                protocol = make_reference_protocol(kind, T, cfg)
                fid = run_simulation(protocol, frames=False).fidelity
        except (DomainError, ContractError, NumericError) as exc:
            raise _error(422, "reference_failure", str(exc))
        payload = dict(protocol.to_json_dict(), fidelity=fid)
        with reference_lock:
            reference_cache[key] = payload
        return payload

    def _optimized_reference(duration: float):
        from .optimizer import OptimizerConfig, optimize
        from .propagation import build_bank, evolve, initial_state, quantize_protocol, target_state

        n = 40
        bank = build_bank(cfg, lattice, duration, n, store=store)
        ocfg = OptimizerConfig(
            n_steps=n, lattice=lattice, seed=0, max_sweeps=reference_max_sweeps
        )
        trace = optimize(ocfg, bank, initial_state(cfg), target_state(cfg))
        dt = duration / n
        times = np.concatenate([[0.0], (np.arange(n) + 0.5) * dt, [duration]])
        pos = trace.final_protocol.positions()
        positions = np.concatenate([[pos[0]], pos, [pos[-1]]])
        return Protocol(times, positions, "optimized"), trace.final_fidelity

    @app.post("/api/simulate")
    def post_simulate(req: SimulateRequest):
        protocol = _protocol_from_payload(
            {"T": req.T, "samples": req.samples, "kind": "human"}
        )
        result = run_simulation(protocol, req.frames)
        payload = {"fidelity": result.fidelity}
        if result.frames is not None:
            payload["frames"] = [
                {"t": float(t), "density": [float(v) for v in dens]}
                for t, dens in result.frames
            ]
            grid = cfg.grid()
            payload["x"] = [
                float(v)
                for v in np.linspace(grid.points[0], grid.points[-1], 160)
            ]
        return payload

    def _protocol_from_payload(payload: dict) -> Protocol:
        try:
            protocol = Protocol.from_json_dict(payload)
        except (DomainError, ContractError) as exc:
            raise _error(422, "invalid_protocol", str(exc))
        if abs(protocol.duration - payload["T"]) > 1e-9 * max(1.0, payload["T"]):
            raise _error(422, "invalid_protocol", "sample times must end at T")
        return protocol

    @app.post("/api/scores")
    def post_score(sub: ScoreSubmission):
        if sub.source not in SCORE_SOURCES:
            raise _error(422, "unknown_source", f"source must be one of {SCORE_SOURCES}")
        payload = dict(sub.protocol)
        payload.setdefault("T", sub.T)
        payload.setdefault("kind", "human")
        protocol = _protocol_from_payload(payload)
        result = run_simulation(protocol, frames=False)
        entry = {
            "name": sub.name,
            "T": sub.T,
            "fidelity": result.fidelity,
            "source": sub.source,
            "protocol": protocol.to_json_dict(),
        }
        return board.append(entry)

    @app.get("/api/scores")
    def get_scores(T: float | None = Query(default=None)):
        return {"scores": board.listing(T)}

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
