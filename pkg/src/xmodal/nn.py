"""MLP forward/backward passes and the ADAM optimizer.

Plain numpy, fully deterministic, no autograd: the backward pass is written
against the exact computation the forward pass caches. All functions are
dtype-preserving — the training pipeline feeds float32, verification code may
push float64 through the same kernels for finite-difference comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, ContractError, DimensionError, NumericError

ACTIVATIONS = ("relu", "tanh", "identity")

# list of (W, b) pairs, one per affine layer
Weights = list[tuple[np.ndarray, np.ndarray]]
Grads = list[tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class MlpSpec:
    """Architecture of one fully connected net.

    ``activations`` has one entry per affine layer and the last entry must be
    ``identity``: outputs are raw, any range clamping is the caller's business.
    """

    layer_widths: tuple[int, ...]
    activations: tuple[str, ...]
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.layer_widths) < 2:
            raise ArgumentError("MlpSpec needs at least input and output widths")
        if any(w <= 0 for w in self.layer_widths):
            raise ArgumentError(f"layer widths must be positive, got {self.layer_widths}")
        if len(self.activations) != len(self.layer_widths) - 1:
            raise ArgumentError(
                f"expected {len(self.layer_widths) - 1} activations, got {len(self.activations)}"
            )
        for name in self.activations:
            if name not in ACTIVATIONS:
                raise ArgumentError(f"unknown activation {name!r}")
        if self.activations[-1] != "identity":
            raise ArgumentError("output layer activation must be identity")
        if self.seed < 0:
            raise ArgumentError("seed must be non-negative")

    @classmethod
    def make(cls, layer_widths, hidden_activation: str = "relu", seed: int = 0) -> "MlpSpec":
        """Spec with one hidden activation repeated and an identity output."""
        widths = tuple(int(w) for w in layer_widths)
        acts = (hidden_activation,) * (len(widths) - 2) + ("identity",)
        return cls(layer_widths=widths, activations=acts, seed=seed)

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths) - 1


def init_weights(spec: MlpSpec, dtype=np.float32) -> Weights:
    """Glorot-uniform weights (±sqrt(6/(fan_in+fan_out))), zero biases, seeded."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    weights: Weights = []
    for fan_in, fan_out in zip(spec.layer_widths[:-1], spec.layer_widths[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype)
        b = np.zeros(fan_out, dtype=dtype)
        weights.append((w, b))
    return weights


def _apply_activation(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    return z


@dataclass
class MlpCache:
    """Activation trace from one forward call, sufficient for exact backprop."""

    spec: MlpSpec
    weights: Weights               # references to the arrays the forward used
    inputs: list[np.ndarray]       # input to each affine layer
    post_acts: list[np.ndarray]    # activation output of each layer


def _check_weights(spec: MlpSpec, weights: Weights) -> None:
    if len(weights) != spec.n_layers:
        raise DimensionError(f"expected {spec.n_layers} weight pairs, got {len(weights)}")
    for i, (w, b) in enumerate(weights):
        want = (spec.layer_widths[i], spec.layer_widths[i + 1])
        if w.shape != want or b.shape != (want[1],):
            raise DimensionError(
                f"layer {i}: weight shapes {w.shape}/{b.shape} do not match widths {want}"
            )


def mlp_forward(spec: MlpSpec, weights: Weights, x: np.ndarray) -> tuple[np.ndarray, MlpCache]:
    """Run a batch [B, in] through the net; returns (output [B, out], cache)."""
    x = np.atleast_2d(np.asarray(x))
    if x.shape[1] != spec.layer_widths[0]:
        raise DimensionError(
            f"layer 0: input has {x.shape[1]} features, spec expects {spec.layer_widths[0]}"
        )
    _check_weights(spec, weights)
    inputs = []
    post_acts = []
    a = x
    for i, (w, b) in enumerate(weights):
        inputs.append(a)
        z = a @ w + b
        a = _apply_activation(spec.activations[i], z)
        post_acts.append(a)
    cache = MlpCache(spec=spec, weights=list(weights), inputs=inputs, post_acts=post_acts)
    return a, cache


def mlp_backward(cache: MlpCache, output_gradient: np.ndarray) -> tuple[Grads, np.ndarray]:
    """Backpropagate through a cached forward pass.

    Returns (weight gradients matching the weight shapes, gradient w.r.t. the
    forward input). The cache must come from the matching ``mlp_forward`` call.
    """
    g = np.atleast_2d(np.asarray(output_gradient))
    out = cache.post_acts[-1]
    if g.shape != out.shape:
        raise ContractError(
            f"output_gradient shape {g.shape} does not match cached output {out.shape}"
        )
    spec = cache.spec
    grads: Grads = [None] * spec.n_layers  # type: ignore[list-item]
    for i in reversed(range(spec.n_layers)):
        act = spec.activations[i]
        a_out = cache.post_acts[i]
        if act == "relu":
            g = g * (a_out > 0)
        elif act == "tanh":
            g = g * (1.0 - a_out * a_out)
        a_in = cache.inputs[i]
        grads[i] = (a_in.T @ g, g.sum(axis=0))
        g = g @ cache.weights[i][0].T
    return grads, g


@dataclass
class AdamState:
    """Bias-corrected ADAM accumulators for one weight set."""

    step_count: int
    first_moment: Grads
    second_moment: Grads
    lr: float
    beta1: float
    beta2: float
    epsilon: float


def adam_init(weights: Weights, lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, epsilon: float = 1e-8) -> AdamState:
    """Fresh optimizer state with zero moments, shaped like ``weights``."""
    if not (0.0 < beta1 < 1.0 and 0.0 < beta2 < 1.0):
        raise ArgumentError("beta1 and beta2 must be in (0, 1)")
    if epsilon <= 0 or lr <= 0:
        raise ArgumentError("lr and epsilon must be positive")
    first = [(np.zeros_like(w), np.zeros_like(b)) for w, b in weights]
    second = [(np.zeros_like(w), np.zeros_like(b)) for w, b in weights]
    return AdamState(step_count=0, first_moment=first, second_moment=second,
                     lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon)


def adam_step(weights: Weights, grads: Grads, state: AdamState) -> tuple[Weights, AdamState]:
    """One bias-corrected ADAM update; returns new weights and new state.

    Functional: inputs are never mutated, so replaying a (weights, state) pair
    is bitwise reproducible.
    """
    if len(grads) != len(weights):
        raise DimensionError("gradient list length does not match weights")
    for i, ((w, b), (gw, gb)) in enumerate(zip(weights, grads)):
        if gw.shape != w.shape or gb.shape != b.shape:
            raise DimensionError(f"layer {i}: gradient shapes do not match weights")
        if not (np.isfinite(gw).all() and np.isfinite(gb).all()):
            raise NumericError(f"non-finite gradient in layer{i}.W/b")
    t = state.step_count + 1
    b1, b2, eps = state.beta1, state.beta2, state.epsilon
    corr1 = 1.0 - b1 ** t
    corr2 = 1.0 - b2 ** t
    new_w: Weights = []
    new_m: Grads = []
    new_v: Grads = []
    for (w, b), (gw, gb), (mw, mb), (vw, vb) in zip(
        weights, grads, state.first_moment, state.second_moment
    ):
        updated, moments1, moments2 = [], [], []
        for p, g, m, v in ((w, gw, mw, vw), (b, gb, mb, vb)):
            m_new = b1 * m + (1.0 - b1) * g
            v_new = b2 * v + (1.0 - b2) * (g * g)
            p_new = p - state.lr * (m_new / corr1) / (np.sqrt(v_new / corr2) + eps)
            updated.append(p_new.astype(p.dtype, copy=False))
            moments1.append(m_new)
            moments2.append(v_new)
        new_w.append((updated[0], updated[1]))
        new_m.append((moments1[0], moments1[1]))
        new_v.append((moments2[0], moments2[1]))
    new_state = AdamState(step_count=t, first_moment=new_m, second_moment=new_v,
                          lr=state.lr, beta1=b1, beta2=b2, epsilon=eps)
    return new_w, new_state
