"""Run manifest: config hash, source revision, timing, artifact content hashes."""

from __future__ import annotations

import hashlib
import json
import subprocess
import time
from pathlib import Path


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def source_revision() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True,
                             text=True, timeout=10, cwd=Path(__file__).parent)
        if out.returncode == 0:
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return "unknown"


class RunManifest:
    """Collects every artifact a run emits, with content hashes."""

    def __init__(self, config_hash: str, out_dir, started: float | None = None):
        self.config_hash = config_hash
        self.out_dir = Path(out_dir)
        self.started = time.time() if started is None else started
        self.artifacts: list[dict] = []
        self.records: dict = {}

    def add_artifact(self, path) -> None:
        path = Path(path)
        self.artifacts.append({
            "path": str(path.relative_to(self.out_dir) if path.is_relative_to(self.out_dir)
                        else path),
            "sha256": file_sha256(path),
        })

    def record(self, key: str, value) -> None:
        self.records[key] = value

    def write(self, name: str = "manifest.json") -> Path:
        payload = {
            "config_hash": self.config_hash,
            "source_revision": source_revision(),
            "wall_clock_s": round(time.time() - self.started, 3),
            "artifacts": self.artifacts,
            **self.records,
        }
        path = self.out_dir / name
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path
