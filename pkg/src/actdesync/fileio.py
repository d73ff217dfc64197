"""File output helpers and seed derivation shared by the pipelines."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import zlib
from pathlib import Path

import numpy as np

from .errors import TraceIOError


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write via a temp file in the same directory and rename over ``path``."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise TraceIOError(f"cannot write {path}: {exc}") from exc
    return path


def dumps_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_json(path: str | Path, doc) -> Path:
    return atomic_write_text(path, dumps_json(doc))


def digest_floats(values) -> str:
    """sha256 of the sorted values as little-endian float64 (order-insensitive)."""
    arr = np.sort(np.asarray(values, dtype="<f8").ravel())
    return "sha256:" + hashlib.sha256(arr.tobytes()).hexdigest()


def digest_json(doc) -> str:
    return "sha256:" + hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def file_digest(path: str | Path) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def derive_seed(base: int, *labels) -> int:
    """Deterministic 64-bit child seed for a labelled sub-campaign."""
    key = tuple(zlib.crc32(str(lab).encode()) for lab in labels)
    ss = np.random.SeedSequence(int(base), spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0])
