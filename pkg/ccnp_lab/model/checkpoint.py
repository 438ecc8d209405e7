"""
Parameter checkpoints.

File layout: b"CCNPCKP1", u32 manifest length, JSON manifest, then every
parameter as little-endian f64 in manifest order. The manifest lists
name, shape and byte offset (relative to the blob) per parameter, plus the
variant, model dims and live branches needed to rebuild the model.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path
from typing import Optional

import numpy as np

from ccnp_lab.exceptions import CheckpointError
from ccnp_lab.model.variants import CCNPModel, build_variant, parse_branches
from ccnp_lab.schemas import ModelDims, VariantKind

MAGIC = b"CCNPCKP1"
_PREFIX = struct.Struct("<8sI")


def _manifest(model: CCNPModel) -> dict:
    entries, offset = [], 0
    for name, p in model.named_parameters():
        entries.append({"name": name, "shape": list(p.shape), "offset": offset})
        offset += p.size * 8
    return {
        "variant": model.kind.value,
        "use_attention": model.use_attention,
        "branches": sorted(b.value for b in model.live),
        "dims": model.dims.model_dump(),
        "parameters": entries,
        "blob_bytes": offset,
    }


def save_checkpoint(model: CCNPModel, path: "str | Path") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = json.dumps(_manifest(model), sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(MAGIC, len(manifest)))
        fh.write(manifest)
        for _, p in model.named_parameters():
            fh.write(np.ascontiguousarray(p.data, dtype="<f8").tobytes())
    return path


def read_manifest(path: "str | Path") -> tuple[dict, bytes]:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if len(raw) < _PREFIX.size:
        raise CheckpointError(f"{path}: truncated checkpoint")
    magic, size = _PREFIX.unpack_from(raw, 0)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (magic {magic!r})")
    try:
        manifest = json.loads(raw[_PREFIX.size:_PREFIX.size + size].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: corrupt manifest: {e}") from e
    blob = raw[_PREFIX.size + size:]
    if len(blob) != manifest.get("blob_bytes"):
        raise CheckpointError(f"{path}: blob has {len(blob)} bytes, manifest says {manifest.get('blob_bytes')}")
    return manifest, blob


def load_checkpoint(path: "str | Path", model: Optional[CCNPModel] = None) -> CCNPModel:
    """
    Load parameters into `model`, or into a freshly built model of the
    recorded variant and dims. Every name and shape must match.
    """
    manifest, blob = read_manifest(path)
    if model is None:
        model = build_variant(
            VariantKind(manifest["variant"]),
            ModelDims(**manifest["dims"]),
            use_attention=manifest.get("use_attention"),
        )
    if "branches" in manifest:
        model.live = parse_branches(manifest["branches"])
    params = model.parameters()
    entries = manifest["parameters"]
    expected = {name: tuple(p.shape) for name, p in params.items()}
    stored = {e["name"]: tuple(e["shape"]) for e in entries}
    if expected != stored:
        missing = sorted(set(expected) - set(stored))
        extra = sorted(set(stored) - set(expected))
        wrong = sorted(n for n in set(expected) & set(stored) if expected[n] != stored[n])
        raise CheckpointError(
            f"{path}: architecture mismatch (missing={missing[:3]}, unexpected={extra[:3]}, shape={wrong[:3]})"
        )
    for e in entries:
        shape = tuple(e["shape"])
        count = int(np.prod(shape)) if shape else 1
        values = np.frombuffer(blob, dtype="<f8", count=count, offset=e["offset"])
        params[e["name"]].data = values.astype(np.float64).reshape(shape)
    return model


def parameter_digest(model: CCNPModel) -> str:
    """sha256 over parameter names and raw bytes, in order."""
    h = hashlib.sha256()
    for name, p in model.named_parameters():
        h.update(name.encode("utf-8"))
        h.update(np.ascontiguousarray(p.data, dtype="<f8").tobytes())
    return h.hexdigest()


def snapshot(model: CCNPModel) -> dict[str, np.ndarray]:
    return {name: p.data.copy() for name, p in model.named_parameters()}


def restore(model: CCNPModel, state: dict[str, np.ndarray]) -> None:
    for name, p in model.named_parameters():
        p.data = state[name].copy()
