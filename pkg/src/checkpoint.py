"""
Versioned binary checkpoint files.

Layout: 8 magic bytes, one format-version byte, a little-endian
uint32 header length, a UTF-8 JSON header, then the float64 little-endian arrays
listed in the header (name and shape) in that order.
"""

import hashlib
import json
import os
import struct
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.config import CHECKPOINT_FORMAT_VERSION
from src.errors import CheckpointError
from src.logger_config import app_logger
from src.schemas.data_schema import (
    ChainState,
    EnergyBreakdown,
    FilamentEnsemble,
    ModelParams,
    MoveCounters,
    SamplerConfig,
)

CHECKPOINT_MAGIC = b"FILCKPT\x00"
_PREFIX = struct.Struct("<8sBI")
_FLOAT = np.dtype("<f8")


def config_hash(params: ModelParams, cfg: SamplerConfig, seed: int) -> str:
    """SHA-256 over the canonical JSON of everything that determines a chain."""
    payload = {
        "model": params.to_dict(),
        "sampler": cfg.to_dict(),
        "beta": params.beta,
        "seed": int(seed),
    }
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _write_frame(
    path: Path, magic: bytes, version: int, header: Dict, arrays: Dict[str, np.ndarray]
) -> None:
    header = dict(header)
    header["arrays"] = [[name, list(np.shape(a))] for name, a in arrays.items()]
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    try:
        with open(tmp, "wb") as fh:
            fh.write(_PREFIX.pack(magic, version, len(header_bytes)))
            fh.write(header_bytes)
            for array in arrays.values():
                fh.write(np.ascontiguousarray(array, dtype=_FLOAT).tobytes())
        os.replace(tmp, path)
    except OSError as e:
        app_logger.error(f"Error writing {path}: {e}")
        raise CheckpointError(f"Error writing {path}: {e}") from e


def _read_frame(path: Path, magic: bytes, version: int) -> Tuple[Dict, Dict[str, np.ndarray]]:
    path = Path(path)
    if not path.is_file():
        app_logger.error(f"File not found at path: {path}")
        raise CheckpointError(f"File not found at path: {path}")
    data = path.read_bytes()
    if len(data) < _PREFIX.size:
        raise CheckpointError(f"{path} is truncated")
    found_magic, found_version, header_len = _PREFIX.unpack_from(data)
    if found_magic != magic:
        app_logger.error(f"{path} has magic {found_magic!r}, expected {magic!r}")
        raise CheckpointError(f"{path} is not a {magic[:7].decode()} file")
    if found_version != version:
        app_logger.error(f"{path} has format version {found_version}, expected {version}")
        raise CheckpointError(f"unsupported format version {found_version} in {path}")
    offset = _PREFIX.size
    try:
        header = json.loads(data[offset : offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"corrupt header in {path}: {e}") from e
    offset += header_len
    arrays = {}
    for name, shape in header.pop("arrays"):
        count = int(np.prod(shape, dtype=np.int64))
        end = offset + count * _FLOAT.itemsize
        if end > len(data):
            raise CheckpointError(f"{path} is truncated inside array {name!r}")
        arrays[name] = np.frombuffer(data, dtype=_FLOAT, count=count, offset=offset).reshape(shape)
        offset = end
    if offset != len(data):
        raise CheckpointError(f"{path} has {len(data) - offset} trailing bytes")
    return header, arrays


def save_checkpoint(
    path: Path,
    state: ChainState,
    params: ModelParams,
    cfg: SamplerConfig,
    seed: int,
    raw_rows: Optional[List[List[float]]] = None,
) -> None:
    """Everything needed to continue the chain bit-for-bit, plus rows measured so far."""
    rows = np.asarray(raw_rows if raw_rows else np.empty((0, 5)), dtype=_FLOAT)
    header = {
        "config_hash": config_hash(params, cfg, seed),
        "model": params.to_dict(),
        "rng_state": state.rng.bit_generator.state,
        "counters": state.counters.to_dict(),
        "energy": {
            "h_self": state.energy.h_self,
            "h_int": state.energy.h_int,
            "i_n": state.energy.i_n,
        },
        "chain": {
            "halfwidth": state.halfwidth,
            "sweep_index": state.sweep_index,
            "phase": state.phase,
            "equilibrated": state.equilibrated,
            "burn_in_sweeps_run": state.burn_in_sweeps_run,
            "measurements_taken": state.measurements_taken,
            "tune_marker": list(state.tune_marker),
        },
    }
    arrays = {
        "beads": state.ensemble.beads,
        "energy_trace": np.asarray(state.energy_trace, dtype=_FLOAT),
        "raw_rows": rows,
    }
    _write_frame(path, CHECKPOINT_MAGIC, CHECKPOINT_FORMAT_VERSION, header, arrays)
    app_logger.debug(f"Checkpoint written to {path} at sweep {state.sweep_index}")


def load_checkpoint(
    path: Path, params: ModelParams, cfg: SamplerConfig, seed: int
) -> Tuple[ChainState, List[List[float]]]:
    """Restore a chain; a checkpoint from a different configuration is rejected."""
    header, arrays = _read_frame(path, CHECKPOINT_MAGIC, CHECKPOINT_FORMAT_VERSION)
    expected = config_hash(params, cfg, seed)
    if header.get("config_hash") != expected:
        app_logger.error(f"Config hash mismatch in {path}")
        raise CheckpointError(f"checkpoint {path} belongs to a different configuration")

    bit_generator = np.random.PCG64()
    try:
        bit_generator.state = header["rng_state"]
    except (TypeError, ValueError, KeyError) as e:
        raise CheckpointError(f"invalid generator state in {path}: {e}") from e

    chain = header["chain"]
    energy = header["energy"]
    state = ChainState(
        ensemble=FilamentEnsemble(arrays["beads"].copy()),
        energy=EnergyBreakdown.from_terms(energy["h_self"], energy["h_int"], energy["i_n"], params),
        rng=np.random.Generator(bit_generator),
        halfwidth=float(chain["halfwidth"]),
        counters=MoveCounters(**header["counters"]),
        sweep_index=int(chain["sweep_index"]),
        phase=chain["phase"],
        equilibrated=bool(chain["equilibrated"]),
        burn_in_sweeps_run=int(chain["burn_in_sweeps_run"]),
        measurements_taken=int(chain["measurements_taken"]),
        energy_trace=arrays["energy_trace"].tolist(),
        tune_marker=tuple(chain["tune_marker"]),
    )
    app_logger.info(f"Resumed chain from {path} at sweep {state.sweep_index}")
    return state, arrays["raw_rows"].tolist()
