"""Cross-modal autoencoder: two encoders and two decoders sharing one latent
space, trained with reconstruction + symmetric InfoNCE contrastive loss,
ADAM updates, and early stopping on validation loss.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, ECG_SHAPE, MRI_SHAPE, SAMPLE_SIZE
from .errors import ArgumentError, DimensionError, NumericError, TrainingError
from .nn import (
    AdamState,
    MlpSpec,
    Weights,
    adam_init,
    adam_step,
    init_weights,
    mlp_backward,
    mlp_forward,
)

MODALITIES = ("ecg", "mri")
LATENT_ORIGINS = ("ecg", "mri", "fused", "synthetic")
NET_NAMES = ("enc_ecg", "enc_mri", "dec_ecg", "dec_mri")

_MODALITY_SHAPES = {"ecg": ECG_SHAPE, "mri": MRI_SHAPE}
_MODALITY_RANGES = {"ecg": (-2.0, 2.0), "mri": (0.0, 1.0)}


@dataclass(frozen=True)
class LatentVector:
    """A point in the shared d-dimensional representation space."""

    values: np.ndarray
    origin: str = "synthetic"

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float32).reshape(-1)
        object.__setattr__(self, "values", v)
        if not np.isfinite(v).all():
            raise NumericError("latent vector contains non-finite values")
        if self.origin not in LATENT_ORIGINS:
            raise ArgumentError(f"origin must be one of {LATENT_ORIGINS}")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class TrainConfig:
    latent_dim: int = 16
    temperature: float = 0.1
    contrastive_weight: float = 1.0
    batch_size: int = 64
    max_epochs: int = 200
    patience: int = 20
    lr: float = 1e-3
    seed: int = 0
    encoder_hidden: tuple[int, ...] = (384, 96)
    # fresh input noise per presentation: stops the contrastive term from
    # memorizing fixed noise realizations of the training pairs
    augment_noise: float = 0.05
    # multiply the learning rate by lr_decay_factor at this epoch (0 = never);
    # polishes the contrastive embedding once the coarse structure is in place
    lr_decay_epoch: int = 120
    lr_decay_factor: float = 0.3

    def __post_init__(self) -> None:
        if self.latent_dim < 1:
            raise ArgumentError("latent_dim must be positive")
        if self.temperature <= 0:
            raise ArgumentError("temperature must be positive")
        if self.contrastive_weight < 0:
            raise ArgumentError("contrastive_weight must be non-negative")
        if self.contrastive_weight > 0 and self.batch_size < 2:
            raise ArgumentError("batch_size must be >= 2 when the contrastive loss is on")
        if self.batch_size < 1 or self.max_epochs < 0 or self.patience < 1:
            raise ArgumentError("batch_size >= 1, max_epochs >= 0, patience >= 1 required")
        if self.lr <= 0:
            raise ArgumentError("lr must be positive")
        if self.augment_noise < 0:
            raise ArgumentError("augment_noise must be non-negative")
        if self.lr_decay_epoch < 0 or self.lr_decay_factor <= 0:
            raise ArgumentError("lr decay epoch must be >= 0 and factor positive")


def build_specs(config: TrainConfig) -> dict[str, MlpSpec]:
    """Encoder/decoder architectures; per-net seeds derive from config.seed."""
    hidden = tuple(config.encoder_hidden)
    d = config.latent_dim
    widths = {
        "enc_ecg": (SAMPLE_SIZE, *hidden, d),
        "enc_mri": (SAMPLE_SIZE, *hidden, d),
        "dec_ecg": (d, *reversed(hidden), SAMPLE_SIZE),
        "dec_mri": (d, *reversed(hidden), SAMPLE_SIZE),
    }
    return {
        name: MlpSpec.make(widths[name], seed=config.seed * 4 + k)
        for k, name in enumerate(NET_NAMES)
    }


@dataclass
class ModelCheckpoint:
    """Weights of all four nets plus the metadata that binds them to a run."""

    specs: dict[str, MlpSpec]
    weights: dict[str, Weights]
    config: TrainConfig
    epoch_of_best: int
    validation_loss_at_best: float
    dataset_fingerprint: str
    val_history: list[float] = field(default_factory=list)
    heads: object | None = None  # FittedHeads, attached by downstream fitting

    @property
    def latent_dim(self) -> int:
        return self.config.latent_dim


# -- losses ---------------------------------------------------------------------


def reconstruction_loss(x: np.ndarray, x_hat: np.ndarray) -> float:
    """Mean squared error with 64-bit accumulation; symmetric in its arguments."""
    a = np.asarray(x)
    b = np.asarray(x_hat)
    if a.shape != b.shape:
        raise DimensionError(f"reconstruction_loss shapes differ: {a.shape} vs {b.shape}")
    diff = a.astype(np.float64) - b.astype(np.float64)
    return float(np.mean(diff * diff))


def _normalize_rows(z: np.ndarray):
    norms = np.sqrt((z * z).sum(axis=1, keepdims=True))
    norms = np.maximum(norms, 1e-12)
    return z / norms, norms


def _log_softmax(s: np.ndarray, axis: int) -> np.ndarray:
    m = s.max(axis=axis, keepdims=True)
    shifted = s - m
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def contrastive_loss(z_ecg: np.ndarray, z_mri: np.ndarray, temperature: float) -> float:
    """Symmetric InfoNCE over cosine similarities; positives on the diagonal.

    Averages the row-wise (ecg→mri) and column-wise (mri→ecg) cross entropies;
    a single-pair batch is a softmax over one candidate and scores zero.
    """
    loss, _, _ = contrastive_loss_and_grad(z_ecg, z_mri, temperature)
    return loss


def contrastive_loss_and_grad(z_ecg: np.ndarray, z_mri: np.ndarray, temperature: float):
    """InfoNCE value plus gradients w.r.t. the raw (unnormalized) latents."""
    if temperature <= 0:
        raise ArgumentError("temperature must be positive")
    ze = np.atleast_2d(np.asarray(z_ecg))
    zm = np.atleast_2d(np.asarray(z_mri))
    if ze.shape != zm.shape:
        raise DimensionError(f"latent batches differ in shape: {ze.shape} vs {zm.shape}")
    b = ze.shape[0]
    ue, ne = _normalize_rows(ze)
    um, nm = _normalize_rows(zm)
    s = (ue @ um.T) / temperature
    log_p_rows = _log_softmax(s, axis=1)
    log_p_cols = _log_softmax(s, axis=0)
    diag = np.arange(b)
    loss = float(-(log_p_rows[diag, diag].mean() + log_p_cols[diag, diag].mean()) / 2.0)

    p_rows = np.exp(log_p_rows)
    p_cols = np.exp(log_p_cols)
    eye = np.eye(b, dtype=s.dtype)
    ds = ((p_rows - eye) + (p_cols - eye)) / (2.0 * b * temperature)
    due = ds @ um
    dum = ds.T @ ue
    # back through the row normalization: d z = (d u - u (u · d u)) / ‖z‖
    dze = (due - ue * (ue * due).sum(axis=1, keepdims=True)) / ne
    dzm = (dum - um * (um * dum).sum(axis=1, keepdims=True)) / nm
    return loss, dze.astype(ze.dtype, copy=False), dzm.astype(zm.dtype, copy=False)


def fuse(z_ecg: LatentVector, z_mri: LatentVector) -> LatentVector:
    """Element-wise mean of two latents; origin becomes 'fused'."""
    if len(z_ecg) != len(z_mri):
        raise DimensionError(
            f"latent lengths differ: {len(z_ecg)} vs {len(z_mri)}"
        )
    return LatentVector(values=(z_ecg.values + z_mri.values) / 2.0, origin="fused")


# -- encode / decode -----------------------------------------------------------------


def _as_flat_batch(sample: np.ndarray, modality: str) -> tuple[np.ndarray, bool]:
    if modality not in MODALITIES:
        raise ArgumentError(f"unknown modality {modality!r}")
    arr = np.asarray(sample, dtype=np.float32)
    shape = _MODALITY_SHAPES[modality]
    if arr.shape == shape or arr.shape == (SAMPLE_SIZE,):
        return arr.reshape(1, SAMPLE_SIZE), True
    if arr.ndim == 2 and arr.shape[1] == SAMPLE_SIZE:
        return arr, False
    if arr.ndim == 3 and arr.shape[1:] == shape:
        return arr.reshape(arr.shape[0], SAMPLE_SIZE), False
    raise ArgumentError(
        f"sample shape {arr.shape} does not match modality {modality!r} {shape}"
    )


def encode_batch(ckpt: ModelCheckpoint, samples: np.ndarray, modality: str) -> np.ndarray:
    flat, _ = _as_flat_batch(samples, modality)
    name = f"enc_{modality}"
    out, _ = mlp_forward(ckpt.specs[name], ckpt.weights[name], flat)
    return out


def encode(ckpt: ModelCheckpoint, sample: np.ndarray, modality: str) -> LatentVector:
    """Embed one sample; deterministic per (weights, sample)."""
    flat, single = _as_flat_batch(sample, modality)
    if not single:
        raise ArgumentError("encode takes a single sample; use encode_batch for batches")
    z = encode_batch(ckpt, flat, modality)[0]
    return LatentVector(values=z, origin=modality)


def decode_batch(ckpt: ModelCheckpoint, z: np.ndarray, modality: str) -> np.ndarray:
    if modality not in MODALITIES:
        raise ArgumentError(f"unknown modality {modality!r}")
    z = np.atleast_2d(np.asarray(z, dtype=np.float32))
    if not np.isfinite(z).all():
        raise NumericError("latent batch contains non-finite values")
    if z.shape[1] != ckpt.latent_dim:
        raise DimensionError(f"latent length {z.shape[1]} != model dim {ckpt.latent_dim}")
    name = f"dec_{modality}"
    out, _ = mlp_forward(ckpt.specs[name], ckpt.weights[name], z)
    lo, hi = _MODALITY_RANGES[modality]
    return np.clip(out, lo, hi)


def decode(ckpt: ModelCheckpoint, z: LatentVector | np.ndarray, modality: str) -> np.ndarray:
    """Decode one latent into a clamped, modality-shaped sample."""
    values = z.values if isinstance(z, LatentVector) else np.asarray(z)
    out = decode_batch(ckpt, values.reshape(1, -1), modality)[0]
    return out.reshape(_MODALITY_SHAPES[modality])


# -- training ----------------------------------------------------------------------


def batch_loss_and_grads(specs: dict[str, MlpSpec], weights: dict[str, Weights],
                         x_ecg: np.ndarray, x_mri: np.ndarray, config: TrainConfig):
    """Total loss on one paired batch and gradients for all four nets.

    loss = mse(ecg) + mse(mri) + λ · InfoNCE(z_ecg, z_mri). Exposed for the
    finite-difference oracle as well as the training loop.
    """
    z_e, cache_enc_e = mlp_forward(specs["enc_ecg"], weights["enc_ecg"], x_ecg)
    z_m, cache_enc_m = mlp_forward(specs["enc_mri"], weights["enc_mri"], x_mri)
    xhat_e, cache_dec_e = mlp_forward(specs["dec_ecg"], weights["dec_ecg"], z_e)
    xhat_m, cache_dec_m = mlp_forward(specs["dec_mri"], weights["dec_mri"], z_m)

    mse_e = reconstruction_loss(x_ecg, xhat_e)
    mse_m = reconstruction_loss(x_mri, xhat_m)
    lam = config.contrastive_weight
    if lam > 0:
        nce, dz_e_nce, dz_m_nce = contrastive_loss_and_grad(z_e, z_m, config.temperature)
    else:
        nce, dz_e_nce, dz_m_nce = 0.0, 0.0, 0.0
    total = mse_e + mse_m + lam * nce

    scale_e = 2.0 / x_ecg.size
    scale_m = 2.0 / x_mri.size
    g_dec_e, dz_e = mlp_backward(cache_dec_e, scale_e * (xhat_e - x_ecg))
    g_dec_m, dz_m = mlp_backward(cache_dec_m, scale_m * (xhat_m - x_mri))
    g_enc_e, _ = mlp_backward(cache_enc_e, dz_e + lam * dz_e_nce)
    g_enc_m, _ = mlp_backward(cache_enc_m, dz_m + lam * dz_m_nce)

    grads = {"enc_ecg": g_enc_e, "enc_mri": g_enc_m, "dec_ecg": g_dec_e, "dec_mri": g_dec_m}
    parts = {"mse_ecg": mse_e, "mse_mri": mse_m, "contrastive": float(nce), "total": total}
    return parts, grads


def _split_matrices(dataset: Dataset, split: str) -> tuple[np.ndarray, np.ndarray]:
    ids = dataset.split_ids(split)
    rows = np.searchsorted(dataset.ids, ids)
    return dataset.ecg[rows], dataset.mri[rows]


def evaluate_loss(specs, weights, x_ecg: np.ndarray, x_mri: np.ndarray,
                  config: TrainConfig) -> float:
    """Deterministic total loss: fixed-order batches at config.batch_size,
    batch losses weighted by batch size."""
    n = len(x_ecg)
    total = 0.0
    for lo in range(0, n, config.batch_size):
        hi = min(lo + config.batch_size, n)
        z_e, _ = mlp_forward(specs["enc_ecg"], weights["enc_ecg"], x_ecg[lo:hi])
        z_m, _ = mlp_forward(specs["enc_mri"], weights["enc_mri"], x_mri[lo:hi])
        xhat_e, _ = mlp_forward(specs["dec_ecg"], weights["dec_ecg"], z_e)
        xhat_m, _ = mlp_forward(specs["dec_mri"], weights["dec_mri"], z_m)
        loss = reconstruction_loss(x_ecg[lo:hi], xhat_e)
        loss += reconstruction_loss(x_mri[lo:hi], xhat_m)
        if config.contrastive_weight > 0:
            loss += config.contrastive_weight * contrastive_loss(
                z_e, z_m, config.temperature)
        total += loss * (hi - lo)
    return total / n


def validation_loss(ckpt_or_weights, dataset: Dataset, config: TrainConfig | None = None,
                    specs=None) -> float:
    """Validation-split loss for a checkpoint (or raw specs+weights)."""
    if isinstance(ckpt_or_weights, ModelCheckpoint):
        specs = ckpt_or_weights.specs
        weights = ckpt_or_weights.weights
        config = ckpt_or_weights.config
    else:
        weights = ckpt_or_weights
    x_e, x_m = _split_matrices(dataset, "validation")
    return evaluate_loss(specs, weights, x_e, x_m, config)


def train(dataset: Dataset, config: TrainConfig) -> ModelCheckpoint:
    """Minimize reconstruction + contrastive loss; keep the weights with the
    minimum validation loss; stop after ``patience`` epochs without improvement.
    """
    sizes = dataset.split_sizes()
    if sizes["train"] == 0 or sizes["validation"] == 0:
        raise ArgumentError("training needs non-empty train and validation splits")
    specs = build_specs(config)
    weights = {name: init_weights(specs[name]) for name in NET_NAMES}
    adam = {name: adam_init(weights[name], lr=config.lr) for name in NET_NAMES}

    tr_e, tr_m = _split_matrices(dataset, "train")
    va_e, va_m = _split_matrices(dataset, "validation")

    best_val = evaluate_loss(specs, weights, va_e, va_m, config)
    best_weights = copy.deepcopy(weights)
    epoch_of_best = 0
    history = [best_val]

    rng = np.random.Generator(np.random.PCG64(config.seed))
    n = len(tr_e)
    sigma = config.augment_noise
    for epoch in range(1, config.max_epochs + 1):
        if epoch == config.lr_decay_epoch:
            for name in NET_NAMES:
                adam[name].lr *= config.lr_decay_factor
        perm = rng.permutation(n)
        for b, lo in enumerate(range(0, n, config.batch_size)):
            idx = perm[lo:lo + config.batch_size]
            x_e, x_m = tr_e[idx], tr_m[idx]
            if sigma > 0:
                x_e = x_e + sigma * rng.standard_normal(x_e.shape).astype(np.float32)
                x_m = x_m + sigma * rng.standard_normal(x_m.shape).astype(np.float32)
            parts, grads = batch_loss_and_grads(specs, weights, x_e, x_m, config)
            if not np.isfinite(parts["total"]):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {b}")
            for name in NET_NAMES:
                weights[name], adam[name] = adam_step(weights[name], grads[name], adam[name])
        val = evaluate_loss(specs, weights, va_e, va_m, config)
        history.append(val)
        if val < best_val:
            best_val = val
            best_weights = copy.deepcopy(weights)
            epoch_of_best = epoch
        elif epoch - epoch_of_best >= config.patience:
            break

    return ModelCheckpoint(
        specs=specs,
        weights=best_weights,
        config=config,
        epoch_of_best=epoch_of_best,
        validation_loss_at_best=best_val,
        dataset_fingerprint=dataset.fingerprint,
        val_history=history,
    )


# -- latent store --------------------------------------------------------------------


@dataclass
class LatentStore:
    """Per-modality latents for every subject, aligned to dataset id order."""

    ids: np.ndarray
    matrices: dict[str, np.ndarray]      # 'ecg' | 'mri' | 'fused' -> [N, d]
    train_std: dict[str, np.ndarray]     # per-dimension std over the train split

    def rows_for(self, subject_ids) -> np.ndarray:
        subject_ids = np.asarray(subject_ids)
        rows = np.searchsorted(self.ids, subject_ids)
        if rows.size and (rows >= len(self.ids)).any():
            raise ArgumentError("subject id outside latent store")
        if not np.array_equal(self.ids[rows], subject_ids):
            raise ArgumentError("unknown subject id in latent store lookup")
        return rows

    def vectors(self, subject_ids, origin: str) -> np.ndarray:
        if origin not in self.matrices:
            raise ArgumentError(f"no latents for origin {origin!r}")
        return self.matrices[origin][self.rows_for(subject_ids)]

    def display_range(self, origin: str) -> np.ndarray:
        """Per-dimension half-range R = 4 × train-split std."""
        return 4.0 * self.train_std[origin]


def compute_latents(ckpt: ModelCheckpoint, dataset: Dataset,
                    batch_size: int = 1024) -> LatentStore:
    """Encode every subject under both encoders; fused = element-wise mean."""
    n = len(dataset)
    d = ckpt.latent_dim
    out = {"ecg": np.empty((n, d), dtype=np.float32),
           "mri": np.empty((n, d), dtype=np.float32)}
    for modality in MODALITIES:
        x = dataset.sample_matrix(modality)
        for lo in range(0, n, batch_size):
            hi = min(lo + batch_size, n)
            out[modality][lo:hi] = encode_batch(ckpt, x[lo:hi], modality)
    out["fused"] = (out["ecg"] + out["mri"]) / 2.0
    train_rows = np.searchsorted(dataset.ids, dataset.split_ids("train"))
    train_std = {
        origin: mat[train_rows].std(axis=0).astype(np.float32)
        for origin, mat in out.items()
    }
    return LatentStore(ids=dataset.ids.copy(), matrices=out, train_std=train_std)
