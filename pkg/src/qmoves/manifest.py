"""Run manifests: one JSON record written next to every CLI run's outputs."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

ARTIFACT_VERSION = "0.1.0"


@dataclass
class RunManifest:
    command: str
    config: dict
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    duration_s: float = 0.0
    version: str = ARTIFACT_VERSION
    rng: dict = field(default_factory=dict)

    def write(self, path: Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True))
        return path


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:10]


def run_directory(root: Path, command: str, config: dict) -> Path:
    """runs/<command>-<timestamp>-<confighash>/, created fresh."""
    stamp = time.strftime("%Y%m%d-%H%M%S")
    path = Path(root) / f"{command}-{stamp}-{config_hash(config)}"
    suffix = 0
    while path.exists():
        suffix += 1
        path = Path(root) / f"{command}-{stamp}-{config_hash(config)}-{suffix}"
    path.mkdir(parents=True)
    return path
