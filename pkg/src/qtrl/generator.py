"""Weight generator: circuit probabilities through a mapping network.

The circuit's first ``k`` basis probabilities, each paired with the bit
string of its basis index, go through a small mapping network
``(n+1) -> 10 -> 10 -> 1`` to give the ``k`` weights of a classical network.
Gradients w.r.t. those weights are routed back to the circuit angles and the
mapping weights by the chain rule.

The probability feature is multiplied by ``prob_scale`` (default ``2**n``, so
a uniform distribution feeds 1.0). Raw probabilities average ``2**-n`` and
leave the circuit with almost no influence on the generated weights at the
default mapping initialization; ``prob_scale=1`` gives the unscaled feature.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import dense, quantum
from .dense import DenseNetSpec
from .errors import ConfigurationError, NumericalError, ShapeError
from .quantum import CircuitParams

MAPPING_HIDDEN = (10, 10)


def qubits_for(k: int) -> int:
    """Smallest ``n >= 1`` with ``2**n >= k``."""
    if k < 1:
        raise ConfigurationError(f"target parameter count must be >= 1, got {k}")
    return max(1, (k - 1).bit_length())


@dataclass(frozen=True)
class QTConfig:
    k: int
    depth: int
    policy_spec: DenseNetSpec | None = None
    prob_scale: float | None = None

    def __post_init__(self):
        if self.depth < 1:
            raise ConfigurationError(f"circuit depth must be >= 1, got {self.depth}")
        if self.policy_spec is not None and dense.param_count(self.policy_spec) != self.k:
            raise ConfigurationError(
                f"k={self.k} does not match policy spec with {dense.param_count(self.policy_spec)} parameters"
            )
        if not 1 <= qubits_for(self.k) <= quantum.MAX_QUBITS:
            raise ConfigurationError(f"k={self.k} needs more than {quantum.MAX_QUBITS} qubits")

    @classmethod
    def for_policy(cls, policy_spec: DenseNetSpec, depth: int, prob_scale: float | None = None) -> QTConfig:
        return cls(dense.param_count(policy_spec), depth, policy_spec, prob_scale)

    @property
    def n(self) -> int:
        return qubits_for(self.k)

    @property
    def feature_scale(self) -> float:
        return float(1 << self.n) if self.prob_scale is None else float(self.prob_scale)

    @property
    def mapping_spec(self) -> DenseNetSpec:
        return DenseNetSpec((self.n + 1, *MAPPING_HIDDEN, 1), "relu", "linear")


@dataclass(frozen=True)
class GeneratedTheta:
    values: np.ndarray
    policy_spec: DenseNetSpec | None = None


def bitstring_features(i: int, n: int) -> np.ndarray:
    """Bits of ``i`` as 0.0/1.0, most significant first."""
    if not 0 <= i < (1 << n):
        raise ConfigurationError(f"basis index {i} out of range for {n} qubits")
    return np.array([(i >> (n - 1 - b)) & 1 for b in range(n)], dtype=np.float64)


@lru_cache(maxsize=16)
def _bit_matrix(k: int, n: int) -> np.ndarray:
    idx = np.arange(k)[:, None]
    shifts = np.arange(n - 1, -1, -1)[None, :]
    bits = ((idx >> shifts) & 1).astype(np.float64)
    bits.flags.writeable = False
    return bits


def _mapping_inputs(probs: np.ndarray, cfg: QTConfig) -> np.ndarray:
    return np.hstack([_bit_matrix(cfg.k, cfg.n), cfg.feature_scale * probs[:cfg.k, None]])


def _check(circuit: CircuitParams, mapping: np.ndarray, cfg: QTConfig):
    if circuit.n != cfg.n:
        raise ShapeError(f"circuit has {circuit.n} qubits, config needs {cfg.n}")
    if circuit.depth != cfg.depth:
        raise ShapeError(f"circuit has depth {circuit.depth}, config needs {cfg.depth}")
    if mapping.shape != (dense.param_count(cfg.mapping_spec),):
        raise ShapeError(
            f"mapping weights must have length {dense.param_count(cfg.mapping_spec)}, got {mapping.shape}"
        )


def generate_theta(circuit: CircuitParams, mapping: np.ndarray, cfg: QTConfig) -> GeneratedTheta:
    _check(circuit, mapping, cfg)
    probs = quantum.probabilities(quantum.run_circuit(circuit))
    theta = dense.forward(cfg.mapping_spec, mapping, _mapping_inputs(probs, cfg))[:, 0]
    return GeneratedTheta(theta, cfg.policy_spec)


def qt_backward(circuit: CircuitParams, mapping: np.ndarray, cfg: QTConfig, grad_theta) -> tuple[np.ndarray, np.ndarray]:
    """Map d(loss)/d(theta) to (d loss/d angles, d loss/d mapping weights)."""
    _check(circuit, mapping, cfg)
    g = np.asarray(grad_theta, dtype=np.float64)
    if g.shape != (cfg.k,):
        raise ShapeError(f"grad_theta must have length {cfg.k}, got {g.shape}")
    if not np.all(np.isfinite(g)):
        raise NumericalError("grad_theta contains non-finite values")
    probs = quantum.probabilities(quantum.run_circuit(circuit))
    grad_mapping, grad_inputs = dense.backward(
        cfg.mapping_spec, mapping, _mapping_inputs(probs, cfg), g[:, None]
    )
    upstream = np.zeros(1 << cfg.n)
    upstream[:cfg.k] = cfg.feature_scale * grad_inputs[:, -1]
    if not np.any(upstream):
        return np.zeros_like(circuit.angles), grad_mapping
    return quantum.backprop_probabilities(circuit, upstream), grad_mapping


def qt_param_count(cfg: QTConfig) -> int:
    return 6 * cfg.n * cfg.depth + dense.param_count(cfg.mapping_spec)


def init_params(cfg: QTConfig, rng: np.random.Generator) -> tuple[CircuitParams, np.ndarray]:
    """Angles uniform in [0, 2*pi), then mapping weights by the dense default."""
    circuit = CircuitParams.random(cfg.n, cfg.depth, rng)
    return circuit, dense.init_weights(cfg.mapping_spec, rng)
