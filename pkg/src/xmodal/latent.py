"""Interactive latent-space verbs: reconstruct a group, perturb one
dimension, interpolate between two latents, translate across modalities.

Everything here is stateless given an immutable checkpoint, so handlers can
run concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cohorts import CohortGroup, representative
from .dataset import Dataset
from .errors import ArgumentError
from .model import (
    LatentStore,
    LatentVector,
    MODALITIES,
    ModelCheckpoint,
    decode,
    encode,
    fuse,
)


@dataclass(frozen=True)
class PerturbationRequest:
    base: LatentVector
    dimension: int
    new_value: float

    def __post_init__(self) -> None:
        if not 0 <= self.dimension < len(self.base):
            raise ArgumentError(
                f"dimension {self.dimension} outside [0, {len(self.base)})"
            )
        if not np.isfinite(self.new_value):
            raise ArgumentError("new_value must be finite")


@dataclass(frozen=True)
class InterpolationRequest:
    z_a: LatentVector
    z_b: LatentVector
    t: float

    def __post_init__(self) -> None:
        if len(self.z_a) != len(self.z_b):
            raise ArgumentError("interpolation endpoints differ in length")
        if not 0.0 <= self.t <= 1.0:
            raise ArgumentError(f"t={self.t} outside [0, 1]")


def _check_modalities(modalities) -> tuple[str, ...]:
    modalities = tuple(modalities)
    for m in modalities:
        if m not in MODALITIES:
            raise ArgumentError(f"unknown modality {m!r}")
    if not modalities:
        raise ArgumentError("at least one modality required")
    return modalities


def reconstruct_group(ckpt: ModelCheckpoint, dataset: Dataset, latents: LatentStore,
                      group: CohortGroup, method: str, modalities=MODALITIES):
    """Decode the group's representative latent per requested modality.

    Returns (vector, nearest subject id or None, {modality: sample}).
    nearest_subject re-encodes the chosen member's own samples, so a singleton
    group decodes exactly decode(encode(subject)).
    """
    modalities = _check_modalities(modalities)
    origin = "fused" if len(modalities) > 1 else modalities[0]
    vector, subject_id = representative(latents, group, method, origin)
    if method == "nearest_subject" and subject_id is not None:
        s = dataset.subject(subject_id)
        if origin == "fused":
            vector = fuse(encode(ckpt, s.ecg, "ecg"), encode(ckpt, s.mri, "mri"))
        else:
            vector = encode(ckpt, getattr(s, origin), origin)
    samples = {m: decode(ckpt, vector, m) for m in modalities}
    return vector, subject_id, samples


def perturb(ckpt: ModelCheckpoint, latents: LatentStore, req: PerturbationRequest,
            modalities=MODALITIES):
    """Decode the base latent and a single-coordinate edit, side by side.

    The edited value must stay within the display range ±R, where R is
    4× the per-dimension std of the training latents for the base's origin.
    """
    modalities = _check_modalities(modalities)
    r = float(latents.display_range(req.base.origin)[req.dimension])
    if abs(req.new_value) > r * (1 + 1e-6):
        raise ArgumentError(
            f"new_value {req.new_value} outside display range ±R (R={r:.6g} "
            f"for dimension {req.dimension} of {req.base.origin} latents)"
        )
    edited = req.base.values.copy()
    edited[req.dimension] = np.float32(req.new_value)
    perturbed = LatentVector(values=edited, origin=req.base.origin)
    out = {
        m: (decode(ckpt, req.base, m), decode(ckpt, perturbed, m))
        for m in modalities
    }
    return perturbed, out


def interpolate(ckpt: ModelCheckpoint, req: InterpolationRequest,
                modalities=MODALITIES):
    """z = (1−t)·z_a + t·z_b decoded per modality; returns (z, samples)."""
    modalities = _check_modalities(modalities)
    t = np.float32(req.t)
    values = (np.float32(1.0) - t) * req.z_a.values + t * req.z_b.values
    origin = req.z_a.origin if req.z_a.origin == req.z_b.origin else "fused"
    z = LatentVector(values=values, origin=origin)
    samples = {m: decode(ckpt, z, m) for m in modalities}
    return z, samples


def translate(ckpt: ModelCheckpoint, sample: np.ndarray, from_modality: str,
              to_modality: str) -> np.ndarray:
    """Encode under one modality, decode under the other."""
    if from_modality == to_modality:
        raise ArgumentError("translate needs two different modalities; "
                            "use reconstruct for same-modality round trips")
    if from_modality not in MODALITIES or to_modality not in MODALITIES:
        raise ArgumentError(f"modalities must be in {MODALITIES}")
    z = encode(ckpt, sample, from_modality)
    return decode(ckpt, z, to_modality)
