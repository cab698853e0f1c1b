"""Run manifests: append-only provenance for every pipeline artifact.

Each command appends one JSON line to <run_dir>/manifest.jsonl carrying
the command name, toolkit version, resolved flat config, global seed,
and sha256 digests of every input and output file. Replaying a line —
rerunning its command with its stored config — must reproduce outputs
with the recorded digests.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path

__all__ = ["sha256_file", "append_entry", "load_manifest"]

MANIFEST_NAME = "manifest.jsonl"


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as stream:
        for chunk in iter(lambda: stream.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def append_entry(
    run_dir,
    command: str,
    config_values: dict,
    seed: int,
    version: str,
    inputs: dict[str, str],
    outputs: dict[str, str],
) -> dict:
    """Append one provenance line; input/output dicts map role -> path."""
    entry = {
        "at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "command": command,
        "version": version,
        "seed": seed,
        "config_sha256": hashlib.sha256(
            json.dumps(config_values, sort_keys=True).encode("utf-8")
        ).hexdigest(),
        "config": config_values,
        "inputs": {
            role: {"path": str(path), "sha256": sha256_file(path)}
            for role, path in inputs.items()
        },
        "outputs": {
            role: {"path": str(path), "sha256": sha256_file(path)}
            for role, path in outputs.items()
        },
    }
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    with open(run_dir / MANIFEST_NAME, "a", encoding="utf-8", newline="\n") as stream:
        stream.write(json.dumps(entry, sort_keys=True) + "\n")
    return entry


def load_manifest(run_dir) -> list[dict]:
    path = Path(run_dir) / MANIFEST_NAME
    if not path.exists():
        return []
    entries = []
    with open(path, encoding="utf-8") as stream:
        for line in stream:
            if line.strip():
                entries.append(json.loads(line))
    return entries
