"""Classical-only policy execution.

Nothing here imports the circuit simulator or the weight generator: a trained
policy is a plain dense network and runs without them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dense, envs
from .dense import DenseNetSpec


def make_policy(spec: DenseNetSpec, theta: np.ndarray):
    """Return ``obs -> action probabilities`` for a ReLU/softmax policy.

    Unflattens once; the per-step call avoids the generic forward's checks.
    """
    layers = [(w.copy(), b.copy()) for w, b in dense.unflatten(spec, np.asarray(theta, dtype=np.float64))]
    hidden, (w_out, b_out) = layers[:-1], layers[-1]

    def policy(obs):
        h = obs
        for w, b in hidden:
            h = w @ h + b
            np.maximum(h, 0.0, out=h)
        z = w_out @ h + b_out
        z -= z.max()
        e = np.exp(z)
        return e / e.sum()

    return policy


def action_probabilities(spec: DenseNetSpec, theta: np.ndarray, observations) -> np.ndarray:
    """Row-wise action distributions for a batch of observations."""
    return dense.softmax(dense.logits(spec, theta, np.atleast_2d(observations)))


@dataclass(frozen=True)
class EvalReport:
    totals: tuple[float, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.totals))

    @property
    def min(self) -> float:
        return float(np.min(self.totals))

    @property
    def max(self) -> float:
        return float(np.max(self.totals))


def evaluate(spec: DenseNetSpec, theta: np.ndarray, env, episodes: int = 10, seed: int = 0) -> EvalReport:
    """Greedy rollouts (argmax, ties to the lowest action index)."""
    if isinstance(env, str):
        env = envs.make(env)
    policy = make_policy(spec, theta)
    rng = np.random.default_rng(seed)
    totals = []
    for _ in range(episodes):
        obs = env.reset(rng)
        total, done = 0.0, False
        while not done:
            res = env.step(int(np.argmax(policy(obs))))
            obs, done = res.observation, res.done
            total += res.reward
        totals.append(total)
    return EvalReport(tuple(totals))
