"""Versioned checkpoint archives for codec and refiner models.

A checkpoint is a single torch archive holding model weights under stable
hierarchical state-dict keys, a metadata record, and (for resumable
training runs) optimizer and RNG state.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Optional

import torch

SCHEMA_VERSION = 1
CHECKPOINT_KINDS = ("codec", "refiner")


def save_checkpoint(path, kind: str, model_state: dict, metadata: dict,
                    optimizer_state: Optional[dict] = None,
                    rng_state: Optional[Any] = None,
                    history: Optional[list] = None,
                    epoch: int = 0) -> Path:
    if kind not in CHECKPOINT_KINDS:
        raise ValueError(f"unknown checkpoint kind {kind!r}")
    payload = {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "metadata": metadata,
        "model_state": model_state,
        "optimizer_state": optimizer_state,
        "rng_state": rng_state,
        "history": history or [],
        "epoch": epoch,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)
    return path


def load_checkpoint(path, expected_kind: Optional[str] = None) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    payload = torch.load(path, map_location="cpu", weights_only=False)
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported checkpoint schema_version {version!r} in {path}")
    if expected_kind is not None and payload.get("kind") != expected_kind:
        raise ValueError(f"expected a {expected_kind} checkpoint, found {payload.get('kind')!r}")
    return payload
