"""Statevector simulation of the U3/CU3 ring ansatz.

Conventions: amplitude index ``i`` encodes basis ``|i>`` with qubit 0 as the
most significant bit. One block applies U3 to every qubit in ascending order,
then CU3 with control ``q`` and target ``(q + 1) % n`` for ``q = 0..n-1``.
Each block/qubit owns six angles: three for its U3, three for the CU3 it
controls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError, NumericalError, ShapeError

MAX_QUBITS = 24

# Incremented on every circuit execution; the classical inference path
# asserts this stays at zero.
_invocations = 0


def invocation_count() -> int:
    """Number of circuit executions (forward or gradient) in this process."""
    return _invocations


def _count():
    global _invocations
    _invocations += 1


def _check_n(n):
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_QUBITS:
        raise ConfigurationError(f"qubit count must be an integer in [1, {MAX_QUBITS}], got {n!r}")


@dataclass(frozen=True)
class StateVector:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        _check_n(self.n)
        if self.amplitudes.shape != (1 << self.n,):
            raise ShapeError(f"expected {1 << self.n} amplitudes, got shape {self.amplitudes.shape}")

    def norm(self) -> float:
        return float(np.sum(self.amplitudes.real ** 2 + self.amplitudes.imag ** 2))


@dataclass(frozen=True)
class CircuitParams:
    """Angle tensor of shape ``(depth, n, 6)`` in radians."""

    angles: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(self.angles, dtype=np.float64)
        if a.ndim != 3 or a.shape[2] != 6 or a.shape[0] < 1:
            raise ShapeError(f"angles must have shape (depth>=1, n, 6), got {a.shape}")
        _check_n(a.shape[1])
        if not np.all(np.isfinite(a)):
            raise NumericalError("circuit angles must be finite")
        object.__setattr__(self, "angles", a)

    @property
    def depth(self) -> int:
        return self.angles.shape[0]

    @property
    def n(self) -> int:
        return self.angles.shape[1]

    @property
    def size(self) -> int:
        return self.angles.size

    @classmethod
    def zeros(cls, n: int, depth: int) -> CircuitParams:
        return cls(np.zeros((depth, n, 6)))

    @classmethod
    def random(cls, n: int, depth: int, rng: np.random.Generator) -> CircuitParams:
        """Angles uniform in [0, 2*pi)."""
        return cls(rng.uniform(0.0, 2.0 * np.pi, size=(depth, n, 6)))


def init_state(n: int) -> StateVector:
    _check_n(n)
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n, amps)


def _check_qubit(state, q, name="qubit"):
    if not 0 <= q < state.n:
        raise ConfigurationError(f"{name} index {q} out of range for {state.n} qubits")


def apply_u3(state: StateVector, qubit: int, mu: float, phi: float, lam: float) -> StateVector:
    """Apply ``U3(mu, phi, lam)`` to one qubit; returns a new state."""
    _check_qubit(state, qubit)
    amps = state.amplitudes.copy()
    kernels.apply_u3(amps, state.n, qubit, mu, phi, lam)
    return StateVector(state.n, amps)


def apply_cu3(
    state: StateVector, control: int, target: int, mu: float, phi: float, lam: float
) -> StateVector:
    """Apply U3 to ``target`` on the subspace where ``control`` is 1."""
    _check_qubit(state, control, "control")
    _check_qubit(state, target, "target")
    if control == target:
        raise ConfigurationError(f"control and target must differ, both are {control}")
    amps = state.amplitudes.copy()
    kernels.apply_cu3(amps, state.n, control, target, mu, phi, lam)
    return StateVector(state.n, amps)


def run_circuit(params: CircuitParams) -> StateVector:
    _count()
    return StateVector(params.n, kernels.run_ansatz(params.angles, params.n))


def probabilities(state: StateVector) -> np.ndarray:
    a = state.amplitudes
    return a.real ** 2 + a.imag ** 2


def backprop_probabilities(params: CircuitParams, upstream_grad) -> np.ndarray:
    """Exact gradient of ``sum_i upstream_grad[i] * p_i`` w.r.t. every angle.

    Uses an adjoint (reverse-mode) sweep over the gate sequence. The result
    has the same ``(depth, n, 6)`` shape as ``params.angles``.
    """
    g = np.ascontiguousarray(upstream_grad, dtype=np.float64)
    if g.shape != (1 << params.n,):
        raise ShapeError(f"upstream gradient must have length {1 << params.n}, got {g.shape}")
    if not np.all(np.isfinite(g)):
        raise NumericalError("upstream gradient contains non-finite values")
    _count()
    grad, _ = kernels.ansatz_gradient(params.angles, params.n, g)
    return grad
