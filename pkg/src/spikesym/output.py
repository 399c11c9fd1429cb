"""Deterministic CSV/JSON writers and the run manifest."""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import os
from pathlib import Path

from . import __version__


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])


def write_json(path, obj) -> None:
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _now() -> str:
    # wall-clock time is recorded in the manifest only, never in outputs
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


class RunManifest:
    def __init__(self, out_dir, command: str, config: dict, seed: int):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.config = config
        self.seed = seed
        self.started = _now()
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.out_dir / name

    def finish(self) -> dict:
        inventory = {name: sha256(self.out_dir / name) for name in sorted(set(self.files))}
        doc = {
            "artifact_version": __version__,
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "started": self.started,
            "finished": _now(),
            "files": inventory,
        }
        tmp = self.out_dir / "manifest.json.tmp"
        write_json(tmp, doc)
        os.replace(tmp, self.out_dir / "manifest.json")
        return doc
