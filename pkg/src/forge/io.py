"""Canonical JSON and content hashes for artifacts."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

from forge.errors import InputError

HASH_NAME = "sha256"


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def digest(obj) -> str:
    return hashlib.sha256(canonical(obj).encode("ascii")).hexdigest()


def write_json(path: str | Path, obj) -> None:
    Path(path).write_text(canonical(obj) + "\n", encoding="ascii")


def read_json(path: str | Path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc
