"""Checkpoint files: one line of JSON header, then little-endian float64 payloads.

The header records the format version, free-form metadata and, for every
tensor, its name, shape and byte offset relative to the end of the header line.
"""
from __future__ import annotations

import json

import numpy as np

from ..errors import CheckpointError

FORMAT_VERSION = 1


def encode_checkpoint(tensors: dict, meta=None) -> bytes:
    table = []
    payload = []
    offset = 0
    for name in sorted(tensors):
        arr = np.asarray(tensors[name], dtype="<f8")
        table.append({"name": name, "shape": list(arr.shape), "offset": offset})
        raw = arr.tobytes()
        payload.append(raw)
        offset += len(raw)
    header = {"format_version": FORMAT_VERSION, "meta": meta or {}, "tensors": table}
    line = json.dumps(header, sort_keys=True, separators=(",", ":")).encode() + b"\n"
    return line + b"".join(payload)


def decode_checkpoint(blob: bytes):
    head, sep, payload = blob.partition(b"\n")
    if not sep:
        raise CheckpointError("missing header line")
    try:
        header = json.loads(head)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"bad header: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {header.get('format_version')}")
    tensors = {}
    for entry in header["tensors"]:
        count = int(np.prod(entry["shape"], dtype=np.int64))
        start = entry["offset"]
        end = start + 8 * count
        if end > len(payload):
            raise CheckpointError(f"tensor {entry['name']} runs past end of file")
        arr = np.frombuffer(payload[start:end], dtype="<f8").astype(np.float64)
        tensors[entry["name"]] = arr.reshape(entry["shape"])
    return tensors, header.get("meta", {})


def save_checkpoint(path, tensors: dict, meta=None) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_checkpoint(tensors, meta))


def load_checkpoint(path):
    with open(path, "rb") as fh:
        return decode_checkpoint(fh.read())
