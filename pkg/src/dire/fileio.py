"""File formats and run manifests.

Matrices travel as EMB1, a little-endian binary with a fixed header
(magic "EMB1", u16 format version, u32 rows, u32 cols) followed by
rows*cols float64 values in row-major order; round-trips are bit-exact and
non-finite payloads are rejected at write time. Teacher checkpoints use the
DIRT container: layer dimensions and weights, the feature-layer index, and
the stored feature statistics. Configs and manifests are JSON; labels are
single-column CSV. Manifests record a 64-bit FNV-1a digest per input and
output file so reruns can be checked for bit-identical artifacts.
"""

from __future__ import annotations

import dataclasses
import json
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, FormatError, ParameterError
from .matrix import as_matrix
from .synthesis import RunConfig
from .teacher import TeacherModel

EMB_MAGIC = b"EMB1"
EMB_VERSION = 1
EMB_HEADER = struct.Struct("<4sHII")  # magic, version, rows, cols

CKPT_MAGIC = b"DIRT"
CKPT_VERSION = 1


def write_emb(path, m) -> None:
    m = as_matrix(m)
    if m.size and not np.all(np.isfinite(m)):
        raise ParameterError(f"write_emb: refusing to write non-finite values to {path}")
    with open(path, "wb") as fh:
        fh.write(EMB_HEADER.pack(EMB_MAGIC, EMB_VERSION, m.shape[0], m.shape[1]))
        fh.write(np.ascontiguousarray(m, dtype="<f8").tobytes())


def read_emb(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < EMB_HEADER.size:
        raise FormatError(f"{path}: truncated header, {len(data)} < {EMB_HEADER.size} bytes")
    magic, version, rows, cols = EMB_HEADER.unpack_from(data, 0)
    if magic != EMB_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at byte offset 0")
    if version != EMB_VERSION:
        raise FormatError(f"{path}: unsupported version {version} at byte offset 4")
    expected = EMB_HEADER.size + 8 * rows * cols
    if len(data) != expected:
        raise FormatError(
            f"{path}: payload truncated at byte offset {len(data)} (expected {expected})")
    payload = np.frombuffer(data, dtype="<f8", offset=EMB_HEADER.size)
    return payload.reshape(rows, cols).astype(np.float64)


def write_labels(path, labels) -> None:
    labels = np.asarray(labels, dtype=np.int64)
    with open(path, "w") as fh:
        fh.write("label\n")
        for v in labels:
            fh.write(f"{int(v)}\n")


def read_labels(path) -> np.ndarray:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0].strip() != "label":
        raise FormatError(f"{path}: expected 'label' header line")
    try:
        return np.array([int(s) for s in lines[1:]], dtype=np.int64)
    except ValueError as exc:
        raise FormatError(f"{path}: non-integer label ({exc})") from exc


def write_teacher(path, model: TeacherModel) -> None:
    """DIRT checkpoint: layer count, per-layer dims + weights + biases,
    feature-layer index, stored feature statistics."""
    if model.feature_mean is None or model.feature_var is None:
        raise ParameterError("write_teacher: model has no stored feature statistics")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sHI", CKPT_MAGIC, CKPT_VERSION, len(model.weights)))
        for w, b in zip(model.weights, model.biases):
            fh.write(struct.pack("<II", w.shape[0], w.shape[1]))
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())
        fh.write(struct.pack("<I", model.feature_layer))
        fh.write(struct.pack("<I", model.feature_mean.shape[0]))
        fh.write(np.ascontiguousarray(model.feature_mean, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.feature_var, dtype="<f8").tobytes())


def read_teacher(path) -> TeacherModel:
    data = Path(path).read_bytes()
    off = 0

    def take(fmt):
        nonlocal off
        size = struct.calcsize(fmt)
        if off + size > len(data):
            raise FormatError(f"{path}: truncated at byte offset {off}")
        vals = struct.unpack_from(fmt, data, off)
        off += size
        return vals

    def take_f64(count):
        nonlocal off
        size = 8 * count
        if off + size > len(data):
            raise FormatError(f"{path}: truncated at byte offset {off}")
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=off).astype(np.float64)
        off += size
        return arr

    magic, version, n_layers = take("<4sHI")
    if magic != CKPT_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at byte offset 0")
    if version != CKPT_VERSION:
        raise FormatError(f"{path}: unsupported version {version} at byte offset 4")
    weights, biases = [], []
    for _ in range(n_layers):
        rows, cols = take("<II")
        weights.append(take_f64(rows * cols).reshape(rows, cols))
        biases.append(take_f64(cols))
    (feature_layer,) = take("<I")
    (feat_dim,) = take("<I")
    mean = take_f64(feat_dim)
    var = take_f64(feat_dim)
    if off != len(data):
        raise FormatError(f"{path}: {len(data) - off} trailing bytes at offset {off}")
    return TeacherModel(weights=weights, biases=biases, feature_layer=feature_layer,
                        feature_mean=mean, feature_var=var)


def load_config(path) -> RunConfig:
    """Parse a JSON RunConfig; unknown keys and invariant violations raise
    ConfigError naming the offending key."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top-level JSON value must be an object")
    return RunConfig.from_dict(raw)


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a. Integrity check for manifests, not cryptographic."""
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def digest_file(path) -> str:
    return f"{fnv1a64(Path(path).read_bytes()):016x}"


@dataclass
class ExperimentManifest:
    """What a CLI stage ran and what it produced."""
    subcommand: str
    argv: list
    tool_version: str = __version__
    config: dict | None = None
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    wall_time_s: float = 0.0

    def record_input(self, path):
        self.inputs[str(path)] = digest_file(path)

    def record_output(self, path):
        self.outputs[str(path)] = digest_file(path)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n"


def write_manifest(path, manifest: ExperimentManifest) -> None:
    Path(path).write_text(manifest.to_json())


def read_manifest(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: malformed manifest JSON ({exc})") from exc


class StageTimer:
    """Context manager stamping wall time onto a manifest."""

    def __init__(self, manifest: ExperimentManifest):
        self.manifest = manifest

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self.manifest

    def __exit__(self, *exc):
        self.manifest.wall_time_s = time.perf_counter() - self._t0
        return False
