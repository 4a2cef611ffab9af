"""Checkpoint file format: 16-byte magic, u64 header length, JSON header,
then concatenated little-endian float32 tensor blobs.

The header carries the net architectures, training config, early-stopping
metadata, the dataset fingerprint, and per-tensor byte offsets/lengths
(blob-relative). Fitted phenotype heads ride along as an optional section
with the same convention.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import FormatError
from .model import ModelCheckpoint, NET_NAMES, TrainConfig
from .nn import MlpSpec
from .predict import CONDITIONS, FittedHeads, Head, PhenotypeSpec

MAGIC = b"XMODAL-AE-CKPT-1"
assert len(MAGIC) == 16


def _tensor_items(ckpt: ModelCheckpoint):
    """Deterministically ordered (name, float32 array) pairs."""
    for net in NET_NAMES:
        for i, (w, b) in enumerate(ckpt.weights[net]):
            yield f"{net}.{i}.W", w
            yield f"{net}.{i}.b", b
    heads = ckpt.heads
    if heads is not None:
        for condition in CONDITIONS:
            yield f"heads.scaler.{condition}.mean", heads.scaler_mean[condition]
            yield f"heads.scaler.{condition}.std", heads.scaler_std[condition]
        for (phen, condition), head in sorted(heads.heads.items()):
            if head.w is not None:
                yield f"heads.{phen}.{condition}.w", head.w


def _heads_meta(heads: FittedHeads | None):
    if heads is None:
        return None
    return {
        "phenotypes": [asdict(p) for p in heads.phenotypes],
        "heads": [
            {
                "phenotype": h.phenotype,
                "condition": h.condition,
                "kind": h.kind,
                "bias": h.b,
                "metric": h.metric,
                "skipped": h.skipped,
                "skip_reason": h.skip_reason,
                "has_weights": h.w is not None,
            }
            for _, h in sorted(heads.heads.items())
        ],
    }


def save_checkpoint(ckpt: ModelCheckpoint, path: str | Path) -> Path:
    path = Path(path)
    tensors = {}
    blobs = []
    offset = 0
    for name, arr in _tensor_items(ckpt):
        data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        tensors[name] = {"offset": offset, "length": len(data), "shape": list(np.shape(arr))}
        blobs.append(data)
        offset += len(data)
    header = {
        "version": 1,
        "specs": {
            net: {
                "layer_widths": list(ckpt.specs[net].layer_widths),
                "activations": list(ckpt.specs[net].activations),
                "seed": ckpt.specs[net].seed,
            }
            for net in NET_NAMES
        },
        "config": asdict(ckpt.config),
        "epoch_of_best": ckpt.epoch_of_best,
        "validation_loss_at_best": ckpt.validation_loss_at_best,
        "dataset_fingerprint": ckpt.dataset_fingerprint,
        "val_history": list(map(float, ckpt.val_history)),
        "heads": _heads_meta(ckpt.heads),
        "tensors": tensors,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(header_bytes)))
        f.write(header_bytes)
        for blob in blobs:
            f.write(blob)
    return path


def _read_tensor(blob: bytes, meta: dict) -> np.ndarray:
    start, length = meta["offset"], meta["length"]
    if start + length > len(blob):
        raise FormatError("tensor extends past end of checkpoint blob")
    arr = np.frombuffer(blob[start:start + length], dtype="<f4")
    return arr.reshape(meta["shape"]).copy()


def load_checkpoint(path: str | Path) -> ModelCheckpoint:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 24 or raw[:16] != MAGIC:
        raise FormatError(f"{path} is not a model checkpoint (bad magic)")
    (header_len,) = struct.unpack("<Q", raw[16:24])
    if 24 + header_len > len(raw):
        raise FormatError("checkpoint header extends past end of file")
    try:
        header = json.loads(raw[24:24 + header_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"unreadable checkpoint header: {e}") from None
    if header.get("version") != 1:
        raise FormatError(f"unsupported checkpoint version {header.get('version')!r}")
    blob = raw[24 + header_len:]

    cfg = header["config"]
    cfg["encoder_hidden"] = tuple(cfg["encoder_hidden"])
    config = TrainConfig(**cfg)
    specs = {
        net: MlpSpec(layer_widths=tuple(s["layer_widths"]),
                     activations=tuple(s["activations"]), seed=s["seed"])
        for net, s in header["specs"].items()
    }
    tensors = header["tensors"]
    weights = {}
    for net in NET_NAMES:
        layers = []
        for i in range(specs[net].n_layers):
            w = _read_tensor(blob, tensors[f"{net}.{i}.W"])
            b = _read_tensor(blob, tensors[f"{net}.{i}.b"])
            layers.append((w, b))
        weights[net] = layers

    heads = None
    if header.get("heads"):
        meta = header["heads"]
        phenotypes = [PhenotypeSpec(**p) for p in meta["phenotypes"]]
        scaler_mean, scaler_std = {}, {}
        for condition in CONDITIONS:
            scaler_mean[condition] = _read_tensor(
                blob, tensors[f"heads.scaler.{condition}.mean"]).astype(np.float64)
            scaler_std[condition] = _read_tensor(
                blob, tensors[f"heads.scaler.{condition}.std"]).astype(np.float64)
        heads = FittedHeads(phenotypes=phenotypes, scaler_mean=scaler_mean,
                            scaler_std=scaler_std)
        for h in meta["heads"]:
            head = Head(phenotype=h["phenotype"], condition=h["condition"],
                        kind=h["kind"], b=h["bias"], metric=h["metric"],
                        skipped=h["skipped"], skip_reason=h["skip_reason"])
            if h["has_weights"]:
                head.w = _read_tensor(
                    blob, tensors[f"heads.{h['phenotype']}.{h['condition']}.w"]
                ).astype(np.float64)
            heads.heads[(h["phenotype"], h["condition"])] = head

    return ModelCheckpoint(
        specs=specs,
        weights=weights,
        config=config,
        epoch_of_best=header["epoch_of_best"],
        validation_loss_at_best=header["validation_loss_at_best"],
        dataset_fingerprint=header["dataset_fingerprint"],
        val_history=list(header.get("val_history", [])),
        heads=heads,
    )
