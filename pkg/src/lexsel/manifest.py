"""Run manifests: every CLI invocation records what it read, what it
wrote, and under which configuration, so a run is replayable from the
manifest alone."""

from __future__ import annotations

import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

import lexsel
from lexsel import _kernels

MANIFEST_NAME = "manifest.json"


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(config: Mapping) -> str:
    canonical = json.dumps(config, ensure_ascii=False, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def write_manifest(
    out_dir: str | Path,
    command: str,
    config: Mapping,
    inputs: Mapping[str, str | Path],
    outputs: Mapping[str, str | Path],
) -> Path:
    def _entry(path: str | Path) -> dict:
        p = Path(path)
        return {"path": str(p), "sha256": sha256_file(p) if p.is_file() else None}

    manifest = {
        "command": command,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "tool": {
            "name": "lexsel",
            "version": lexsel.__version__,
            "python": sys.version.split()[0],
            "kernel_backend": _kernels.BACKEND,
        },
        "config": dict(config),
        "config_hash": config_hash(config),
        "inputs": {name: _entry(path) for name, path in sorted(inputs.items())},
        "outputs": {name: _entry(path) for name, path in sorted(outputs.items())},
    }
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / MANIFEST_NAME
    path.write_text(
        json.dumps(manifest, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    return path
