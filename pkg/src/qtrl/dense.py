"""Dense networks with hand-written forward/backward passes and Adam.

Weights live in one flat vector. Per layer the ``(out, in)`` weight matrix is
stored row-major, followed by the ``out`` biases; layers are in order.

``forward`` and ``backward`` accept either one input vector or a 2-D array of
row-stacked inputs; with rows, weight gradients are summed over rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericalError, ShapeError

HIDDEN_ACTIVATIONS = ("relu",)
OUTPUT_HEADS = ("linear", "softmax")


@dataclass(frozen=True)
class DenseNetSpec:
    layer_sizes: tuple[int, ...]
    hidden_activation: str = "relu"
    output_head: str = "linear"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise ConfigurationError(f"need >= 2 layers of size >= 1, got {self.layer_sizes}")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ConfigurationError(f"unknown hidden activation {self.hidden_activation!r}")
        if self.output_head not in OUTPUT_HEADS:
            raise ConfigurationError(f"unknown output head {self.output_head!r}")
        object.__setattr__(self, "layer_sizes", sizes)

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    def to_dict(self) -> dict:
        return {
            "layer_sizes": list(self.layer_sizes),
            "hidden_activation": self.hidden_activation,
            "output_head": self.output_head,
        }

    @classmethod
    def from_dict(cls, d: dict) -> DenseNetSpec:
        return cls(tuple(d["layer_sizes"]), d["hidden_activation"], d["output_head"])


def param_count(spec: DenseNetSpec) -> int:
    s = spec.layer_sizes
    return sum(a * b + b for a, b in zip(s[:-1], s[1:]))


def unflatten(spec: DenseNetSpec, weights: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split flat weights into per-layer ``(W, b)`` views (no copies)."""
    if weights.shape != (param_count(spec),):
        raise ShapeError(f"expected {param_count(spec)} weights, got shape {weights.shape}")
    layers = []
    pos = 0
    for fan_in, fan_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
        w = weights[pos:pos + fan_in * fan_out].reshape(fan_out, fan_in)
        pos += fan_in * fan_out
        b = weights[pos:pos + fan_out]
        pos += fan_out
        layers.append((w, b))
    return layers


def init_weights(spec: DenseNetSpec, rng: np.random.Generator) -> np.ndarray:
    """Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases."""
    out = np.empty(param_count(spec))
    for w, b in unflatten(spec, out):
        bound = 1.0 / np.sqrt(w.shape[1])
        w[...] = rng.uniform(-bound, bound, size=w.shape)
        b[...] = rng.uniform(-bound, bound, size=b.shape)
    return out


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - np.max(z, axis=-1, keepdims=True)
    return z - np.log(np.sum(np.exp(z), axis=-1, keepdims=True))


def _as_input(spec, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[-1] != spec.n_inputs:
        raise ShapeError(f"input must have trailing size {spec.n_inputs}, got shape {x.shape}")
    return x


def _forward_cached(spec, weights, x):
    layers = unflatten(spec, weights)
    acts = [x]
    pre = []
    h = x
    for li, (w, b) in enumerate(layers):
        z = h @ w.T + b
        pre.append(z)
        h = np.maximum(z, 0.0) if li < len(layers) - 1 else z
        acts.append(h)
    return layers, acts, pre


def logits(spec: DenseNetSpec, weights: np.ndarray, x) -> np.ndarray:
    """Network output before the head is applied."""
    _, acts, _ = _forward_cached(spec, weights, _as_input(spec, x))
    return acts[-1]


def forward(spec: DenseNetSpec, weights: np.ndarray, x) -> np.ndarray:
    z = logits(spec, weights, x)
    return softmax(z) if spec.output_head == "softmax" else z


def backward(spec: DenseNetSpec, weights: np.ndarray, x, upstream, *, through_head: bool = True):
    """Reverse-mode gradients ``(grad_weights, grad_input)``.

    ``upstream`` is d(loss)/d(output). With ``through_head=False`` it is taken
    as d(loss)/d(logits) instead, which is how the fused softmax/NLL gradient
    ``(probs - onehot) * weight`` is fed in.
    """
    x = _as_input(spec, x)
    g = np.asarray(upstream, dtype=np.float64)
    if g.shape != x.shape[:-1] + (spec.n_outputs,):
        raise ShapeError(f"upstream must have shape {x.shape[:-1] + (spec.n_outputs,)}, got {g.shape}")
    layers, acts, pre = _forward_cached(spec, weights, x)
    if through_head and spec.output_head == "softmax":
        p = softmax(acts[-1])
        g = p * (g - np.sum(g * p, axis=-1, keepdims=True))

    grad_w = np.zeros_like(weights)
    grad_layers = unflatten(spec, grad_w)
    for li in range(len(layers) - 1, -1, -1):
        w, _ = layers[li]
        gw, gb = grad_layers[li]
        if li < len(layers) - 1:
            g = g * (pre[li] > 0.0)
        h = acts[li]
        if g.ndim == 1:
            gw[...] = np.outer(g, h)
            gb[...] = g
        else:
            gw[...] = g.T @ h
            gb[...] = g.sum(axis=0)
        g = g @ w
    return grad_w, g


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, size: int, lr: float = 1e-3, **kw) -> AdamState:
        return cls(np.zeros(size), np.zeros(size), lr=lr, **kw)


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam step (descent). Inputs are not modified."""
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ShapeError(f"params {params.shape}, grads {grads.shape}, moments {state.m.shape} differ")
    if not np.all(np.isfinite(grads)):
        raise NumericalError("non-finite gradient passed to adam_step")
    t = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    new_state = AdamState(m, v, t, state.lr, state.beta1, state.beta2, state.eps)
    return new_params, new_state
