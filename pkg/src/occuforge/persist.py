"""Model container files.

Layout::

    OCCUFORGE-MODEL
    format_version: 1
    kind: hybrid
    ...header lines...
    array: <name> <dim,dim,...>
    end_header
    <payload: every array as little-endian float32, in header order>
    \\nsha256:<hex digest of everything before this trailer>\\n

Weights are stored in 32-bit precision. Saving rounds the in-memory model to
the stored values so both sides threshold identical weights.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import DayTypeProfiles
from .models import HybridConfig, HybridModel, LogisticConfig, LogisticModel, RecurrentConfig, RecurrentModel

MAGIC = "OCCUFORGE-MODEL"
FORMAT_VERSION = 1
FEATURE_LAYOUT = ("x1=y[t-1..t-m] most recent first; "
                  "x2=[slot/144, day_of_week/6 (Sunday=0), weekend, profile[1..144]]")
TRAILER_TAG = b"\nsha256:"


class ModelFormatError(ValueError):
    pass


class ChecksumError(ModelFormatError):
    pass


@dataclass
class SavedModel:
    model: object
    profiles: DayTypeProfiles | None = None
    charger_id: str | None = None


def _arrays(model) -> dict[str, np.ndarray]:
    return dict(model.params)


def save_model(model, path, profiles: DayTypeProfiles | None = None, charger_id: str | None = None) -> Path:
    path = Path(path)
    arrays = _arrays(model)
    if profiles is not None:
        arrays["profile.weekday"] = profiles.weekday
        arrays["profile.weekend"] = profiles.weekend
    threshold = model.config.threshold
    header = [MAGIC, f"format_version: {FORMAT_VERSION}", f"kind: {model.kind}",
              f"config: {json.dumps(model.config.to_dict(), sort_keys=True)}",
              f"threshold: {threshold!r}", f"feature_layout: {FEATURE_LAYOUT}"]
    if charger_id is not None:
        header.append(f"charger_id: {charger_id}")
    payload = bytearray()
    for name, arr in arrays.items():
        header.append(f"array: {name} {','.join(str(d) for d in arr.shape)}")
        payload += np.ascontiguousarray(arr, dtype="<f4").tobytes()
    header.append("end_header")
    body = ("\n".join(header) + "\n").encode("utf-8") + bytes(payload)
    digest = hashlib.sha256(body).hexdigest().encode("ascii")
    try:
        path.write_bytes(body + TRAILER_TAG + digest + b"\n")
    except OSError as exc:
        raise OSError(f"cannot write model file {path}: {exc}") from exc
    _quantize(model)
    return path


def _quantize(model) -> None:
    if isinstance(model, LogisticModel):
        model.weights[:] = model.weights.astype(np.float32)
        model.intercept = float(np.float32(model.intercept))
        return
    for p in model.params.values():
        p[...] = p.astype(np.float32)


def load_bundle(path) -> SavedModel:
    data = Path(path).read_bytes()
    cut = data.rfind(TRAILER_TAG)
    if cut < 0 or not data.endswith(b"\n"):
        raise ChecksumError(f"{path}: missing checksum trailer (truncated or not a model file)")
    body = data[:cut]
    stored = data[cut + len(TRAILER_TAG):-1]
    if hashlib.sha256(body).hexdigest().encode("ascii") != stored:
        raise ChecksumError(f"{path}: checksum mismatch")
    end = body.find(b"end_header\n")
    if end < 0:
        raise ModelFormatError(f"{path}: no header terminator")
    lines = body[:end].decode("utf-8").splitlines()
    if not lines or lines[0] != MAGIC:
        raise ModelFormatError(f"{path}: not an occuforge model file")
    meta: dict[str, str] = {}
    arrays: list[tuple[str, tuple[int, ...]]] = []
    for line in lines[1:]:
        key, _, value = line.partition(": ")
        if key == "array":
            name, dims = value.split(" ")
            arrays.append((name, tuple(int(d) for d in dims.split(",") if d)))
        else:
            meta[key] = value
    version = meta.get("format_version")
    if version != str(FORMAT_VERSION):
        raise ModelFormatError(f"{path}: unsupported format version {version!r} (expected {FORMAT_VERSION})")
    payload = body[end + len(b"end_header\n"):]
    values: dict[str, np.ndarray] = {}
    offset = 0
    for name, shape in arrays:
        n = int(np.prod(shape)) * 4
        if offset + n > len(payload):
            raise ModelFormatError(f"{path}: payload shorter than declared arrays")
        values[name] = np.frombuffer(payload[offset:offset + n], dtype="<f4").astype(np.float64).reshape(shape)
        offset += n
    if offset != len(payload):
        raise ModelFormatError(f"{path}: payload longer than declared arrays")

    profiles = None
    if "profile.weekday" in values:
        profiles = DayTypeProfiles(values.pop("profile.weekday"), values.pop("profile.weekend"),
                                   meta.get("charger_id", ""))
    config = json.loads(meta["config"])
    kind = meta.get("kind")
    if kind == "hybrid":
        model = HybridModel(HybridConfig(**config), values)
    elif kind == "recurrent":
        model = RecurrentModel(RecurrentConfig(**config), values)
    elif kind == "logistic":
        model = LogisticModel(values["w"], float(values["b"][0]), LogisticConfig(**config))
    else:
        raise ModelFormatError(f"{path}: unknown model kind {kind!r}")
    return SavedModel(model, profiles, meta.get("charger_id"))


def load_model(path):
    return load_bundle(path).model
