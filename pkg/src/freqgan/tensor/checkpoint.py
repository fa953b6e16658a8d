"""Checkpoint files: a JSON manifest plus one raw little-endian float64 blob.

The manifest lists every array by name with its shape and byte offset into
the blob, and carries free-form metadata (seed, iteration, RNG state, ...).
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from freqgan.errors import FormatError

_DTYPE = np.dtype("<f8")


def save_checkpoint(stem, arrays: dict[str, np.ndarray], meta: dict | None = None) -> tuple[Path, Path]:
    """Write ``<stem>.json`` and ``<stem>.bin``; returns both paths."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    manifest_path, blob_path = stem.with_suffix(".json"), stem.with_suffix(".bin")
    entries, offset = [], 0
    with open(blob_path, "wb") as fh:
        for name, arr in arrays.items():
            buf = np.ascontiguousarray(arr, dtype=_DTYPE).tobytes()
            entries.append({"name": name, "shape": list(np.shape(arr)), "offset": offset,
                            "nbytes": len(buf)})
            fh.write(buf)
            offset += len(buf)
    manifest = {"format": "freqgan-checkpoint-1", "blob": blob_path.name, "dtype": "<f8",
                "tensors": entries, "meta": meta or {}}
    manifest_path.write_text(json.dumps(manifest, indent=1))
    return manifest_path, blob_path


def load_checkpoint(stem) -> tuple[dict[str, np.ndarray], dict]:
    stem = Path(stem)
    manifest_path = stem if stem.suffix == ".json" else stem.with_suffix(".json")
    try:
        manifest = json.loads(manifest_path.read_text())
        entries = manifest["tensors"]
    except (json.JSONDecodeError, KeyError) as exc:
        raise FormatError(f"{manifest_path}: malformed checkpoint manifest ({exc})") from None
    blob = (manifest_path.parent / manifest["blob"]).read_bytes()
    arrays = {}
    for e in entries:
        end = e["offset"] + e["nbytes"]
        if end > len(blob):
            raise FormatError(f"{manifest_path}: tensor {e['name']!r} runs past end of blob")
        arr = np.frombuffer(blob, dtype=_DTYPE, count=e["nbytes"] // 8, offset=e["offset"])
        arrays[e["name"]] = arr.reshape(e["shape"]).astype(np.float64)
    return arrays, manifest.get("meta", {})
