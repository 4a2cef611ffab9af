"""Exact O(N²) t-SNE for the 2-D exploration scatter layouts.

Perplexity calibration runs a per-row binary search on the Gaussian
precision; the embedding minimizes KL(P‖Q) against a Student-t Q with the
classic schedule: early exaggeration, momentum switch, per-parameter gains.

Pairwise squared distances are computed from explicit coordinate differences
(never the ‖a‖² − 2a·b + ‖b‖² expansion), so translating the input leaves
every distance — and therefore the layout — bitwise unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, NumericError

_TINY = 1e-12
_LN2 = np.log(2.0)


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    iterations: int = 750
    early_exaggeration_factor: float = 12.0
    early_exaggeration_iters: int = 250
    learning_rate: float = 200.0
    momentum_initial: float = 0.5
    momentum_final: float = 0.8
    momentum_switch_iter: int = 250
    seed: int = 0

    def __post_init__(self) -> None:
        if self.perplexity <= 0:
            raise ArgumentError("perplexity must be positive")
        if self.iterations < 1:
            raise ArgumentError("iterations must be at least 1")
        if self.learning_rate <= 0:
            raise ArgumentError("learning_rate must be positive")


@dataclass
class Embedding2D:
    """2-D layout plus the KL trace that produced it."""

    points: np.ndarray          # [N, 2] float64, centroid at the origin
    source_modality: str
    config: TsneConfig
    kl_final: float
    kl_trace: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]


def pairwise_sq_dists(x: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance matrix from coordinate differences, chunked."""
    x = np.asarray(x, dtype=np.float64)
    n, d = x.shape
    out = np.empty((n, n))
    chunk = max(1, int(4_000_000 // max(1, n * d)))
    for lo in range(0, n, chunk):
        diff = x[lo:lo + chunk, None, :] - x[None, :, :]
        out[lo:lo + chunk] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def _check_perplexity(n: int, perplexity: float) -> None:
    if n < 4:
        raise ArgumentError(f"t-SNE needs at least 4 points, got {n}")
    if not 0 < perplexity < (n - 1) / 3:
        raise ArgumentError(
            f"perplexity {perplexity} invalid for N={n}: need 0 < perplexity < (N-1)/3"
        )


def conditional_rows(x: np.ndarray, perplexity: float,
                     max_steps: int = 64, tol_bits: float = 1e-4):
    """Per-row conditional affinities and the calibrated precisions.

    Each row's Gaussian precision is bisected until the row entropy matches
    log2(perplexity) bits within ``tol_bits`` (or ``max_steps`` halvings).
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    _check_perplexity(n, perplexity)
    d2 = pairwise_sq_dists(x)
    target = np.log2(perplexity)
    p_cond = np.zeros((n, n))
    betas = np.empty(n)
    idx = np.arange(n)
    for i in range(n):
        di = np.delete(d2[i], i)
        # shifting by the row minimum keeps exp() in range and cancels in the
        # normalized row (and in the entropy, which is shift-invariant)
        di = di - di.min()
        beta, beta_min, beta_max = 1.0, 0.0, np.inf
        row = None
        for _ in range(max_steps):
            row = np.exp(-di * beta)
            s = row.sum()  # >= 1: the nearest neighbor contributes exp(0)
            row = row / s
            # H in nats: ln(s) + beta * E[d]; convert to bits for the target
            h_bits = (np.log(s) + beta * float(di @ row)) / _LN2
            if abs(h_bits - target) <= tol_bits:
                break
            if h_bits > target:
                beta_min = beta
                beta = beta * 2.0 if beta_max == np.inf else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = (beta + beta_min) / 2.0
        betas[i] = beta
        p_cond[i, idx != i] = row
    return p_cond, betas


def conditional_affinities(x: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetrized joint affinities P = (P_cond + P_condᵀ) / 2N; entries sum to 1."""
    p_cond, _ = conditional_rows(x, perplexity)
    n = p_cond.shape[0]
    return (p_cond + p_cond.T) / (2.0 * n)


def _student_t_q(y: np.ndarray):
    """Unnormalized Student-t kernel and the normalized Q matrix."""
    num = 1.0 / (1.0 + pairwise_sq_dists(y))
    np.fill_diagonal(num, 0.0)
    q = num / num.sum()
    return num, q


def kl_divergence_and_grad(p: np.ndarray, y: np.ndarray):
    """KL(P‖Q) at layout ``y`` and its exact gradient, [N, 2]."""
    num, q = _student_t_q(y)
    kl = float(np.sum(np.where(p > 0, p * np.log(np.maximum(p, _TINY) / np.maximum(q, _TINY)), 0.0)))
    pq = (p - q) * num
    grad = 4.0 * (np.diag(pq.sum(axis=1)) @ y - pq @ y)
    return kl, grad


def tsne_fit(x: np.ndarray, config: TsneConfig | None = None,
             source_modality: str = "latent") -> Embedding2D:
    """Embed N latent vectors into 2-D; deterministic per (x, config)."""
    config = config or TsneConfig()
    x = np.asarray(x, dtype=np.float64)
    _check_perplexity(x.shape[0], config.perplexity)
    n = x.shape[0]
    p = conditional_affinities(x, config.perplexity)
    p_logp = float(np.sum(np.where(p > 0, p * np.log(np.maximum(p, _TINY)), 0.0)))

    rng = np.random.Generator(np.random.PCG64(config.seed))
    y = rng.standard_normal((n, 2)) * 1e-4
    update = np.zeros_like(y)
    gains = np.ones_like(y)
    kl_trace = np.empty(config.iterations)

    for it in range(config.iterations):
        exaggerate = it < config.early_exaggeration_iters
        p_eff = p * config.early_exaggeration_factor if exaggerate else p
        num, q = _student_t_q(y)
        pq = (p_eff - q) * num
        grad = 4.0 * (pq.sum(axis=1)[:, None] * y - pq @ y)

        inc = (update * grad) < 0
        gains[inc] += 0.2
        gains[~inc] *= 0.8
        np.clip(gains, 0.01, None, out=gains)

        momentum = (config.momentum_initial if it < config.momentum_switch_iter
                    else config.momentum_final)
        update = momentum * update - config.learning_rate * (gains * grad)
        y = y + update
        y = y - y.mean(axis=0)

        if not np.isfinite(y).all():
            raise NumericError(f"t-SNE diverged at iteration {it}")
        # true (un-exaggerated) KL for the trace
        kl_trace[it] = p_logp - float(np.sum(p * np.log(np.maximum(q, _TINY))))

    return Embedding2D(points=y, source_modality=source_modality, config=config,
                       kl_final=float(kl_trace[-1]), kl_trace=kl_trace)
