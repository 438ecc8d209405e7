"""
Binary dataset cache.

<name>.bin layout (little-endian):
    header   b"CCNPDAT1", u32 version, u32 record count
    record   u8 split, u32 n, u32 d, u32 k, u16 len(family_id), family_id utf-8,
             x (n f8), y (n*d f8), coeffs (k f8)
<name>.meta.json carries the DatasetConfig the file was generated from.
"""

from __future__ import annotations

import json
import logging
import struct
from pathlib import Path
from typing import Optional

import numpy as np

from ccnp_lab.config import get_settings
from ccnp_lab.datagen.instances import Instantiation
from ccnp_lab.datagen.splits import MetaDataset, make_meta_dataset
from ccnp_lab.exceptions import DatasetError
from ccnp_lab.schemas import DatasetConfig

logger = logging.getLogger(__name__)

MAGIC = b"CCNPDAT1"
VERSION = 1
_HEADER = struct.Struct("<8sII")
_RECORD = struct.Struct("<BIIIH")
_SPLIT_CODES = {"train": 0, "val": 1, "test": 2}
_SPLIT_NAMES = {v: k for k, v in _SPLIT_CODES.items()}


def cache_paths(name: str, root: Path) -> tuple[Path, Path]:
    return root / f"{name}.bin", root / f"{name}.meta.json"


def write_cache(dataset: MetaDataset, path: Path) -> None:
    records = [(split, inst) for split in MetaDataset.SPLITS for inst in dataset.split(split)]
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, len(records)))
        for split, inst in records:
            fid = inst.family_id.encode("utf-8")
            n, d = inst.y.shape
            fh.write(_RECORD.pack(_SPLIT_CODES[split], n, d, len(inst.coeffs), len(fid)))
            fh.write(fid)
            for arr in (inst.x, inst.y, inst.coeffs):
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_cache(path: Path) -> MetaDataset:
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise DatasetError(f"cannot read dataset cache {path}: {e}") from e

    if len(blob) < _HEADER.size:
        raise DatasetError(f"{path}: truncated header")
    magic, version, count = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise DatasetError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise DatasetError(f"{path}: unsupported cache version {version}")

    def take(offset: int, n_values: int) -> tuple[np.ndarray, int]:
        end = offset + 8 * n_values
        if end > len(blob):
            raise DatasetError(f"{path}: truncated record")
        return np.frombuffer(blob, dtype="<f8", count=n_values, offset=offset).astype(np.float64), end

    dataset = MetaDataset()
    offset = _HEADER.size
    for _ in range(count):
        if offset + _RECORD.size > len(blob):
            raise DatasetError(f"{path}: truncated record header")
        code, n, d, k, fid_len = _RECORD.unpack_from(blob, offset)
        offset += _RECORD.size
        family_id = blob[offset:offset + fid_len].decode("utf-8")
        offset += fid_len
        x, offset = take(offset, n)
        y, offset = take(offset, n * d)
        coeffs, offset = take(offset, k)
        if code not in _SPLIT_NAMES:
            raise DatasetError(f"{path}: unknown split code {code}")
        dataset.split(_SPLIT_NAMES[code]).append(
            Instantiation(x=x, y=y.reshape(n, d), coeffs=coeffs, family_id=family_id)
        )
    if offset != len(blob):
        raise DatasetError(f"{path}: {len(blob) - offset} trailing bytes")
    return dataset


def generate(config: DatasetConfig) -> MetaDataset:
    """Build every source of the config with its own child seed and merge the splits."""
    dataset = MetaDataset()
    sources = config.sources()
    seeds = np.random.SeedSequence(config.seed).spawn(len(sources))
    for spec, seed in zip(sources, seeds):
        dataset.extend(make_meta_dataset(
            spec, config.count, config.split_ratio, seed,
            n_points=config.n_points, x_range=config.x_range,
        ))
    return dataset


def _meta(config: DatasetConfig, dataset: MetaDataset) -> dict:
    return {"version": VERSION, "config": config.model_dump(mode="json"), "sizes": dataset.sizes()}


def load_or_generate(config: DatasetConfig, root: Optional[Path] = None) -> MetaDataset:
    """
    Read <root>/<name>.bin if its sidecar matches the config, otherwise
    regenerate and rewrite both files. root defaults to CCNP_LAB_DATA.
    """
    root = Path(root) if root is not None else get_settings().data_root
    bin_path, meta_path = cache_paths(config.name, root)
    wanted = config.model_dump(mode="json")

    if bin_path.exists() and meta_path.exists():
        try:
            meta = json.loads(meta_path.read_text())
        except (OSError, json.JSONDecodeError) as e:
            logger.warning(f"Ignoring unreadable cache sidecar {meta_path}: {e}")
            meta = {}
        if meta.get("version") == VERSION and meta.get("config") == wanted:
            dataset = read_cache(bin_path)
            logger.info(f"Dataset cache hit: {bin_path} {dataset.sizes()}")
            return dataset
        logger.info(f"Dataset cache at {bin_path} is stale, regenerating")

    dataset = generate(config)
    write_cache(dataset, bin_path)
    meta_path.write_text(json.dumps(_meta(config, dataset), indent=2, sort_keys=True))
    logger.info(f"Dataset written: {bin_path} {dataset.sizes()}")
    return dataset
