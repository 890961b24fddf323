"""REINFORCE training in two modes.

``classical`` optimizes the policy weights directly. ``qtrl`` optimizes the
circuit angles and mapping weights that generate the policy weights, routing
the policy gradient through the generator.

One Adam update per episode; the loss is summed over time steps and weighted
by per-episode normalized returns-to-go.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import dense, envs
from .dense import AdamState, DenseNetSpec
from .errors import ConfigurationError, NumericalError
from .inference import evaluate, make_policy  # noqa: F401  (re-exported)

POLICY_HIDDEN = {"cartpole": (128,), "minigrid": (32,)}
MODES = ("classical", "qtrl")
# every generator weight moves all k policy weights at once, so qtrl needs a smaller step
DEFAULT_LR = {"classical": 1e-3, "qtrl": 3e-4}


def policy_spec_for(env_name: str, hidden: tuple[int, ...] | None = None) -> DenseNetSpec:
    env_cls = envs.ENVIRONMENTS[env_name]
    hidden = POLICY_HIDDEN[env_name] if hidden is None else tuple(hidden)
    return DenseNetSpec((env_cls.obs_size, *hidden, env_cls.n_actions), "relu", "softmax")


@dataclass(frozen=True)
class TrainConfig:
    env: str = "cartpole"
    mode: str = "classical"
    depth: int = 1
    episodes: int = 2000
    gamma: float = 0.99
    lr: float | None = None
    seed: int = 0
    norm_eps: float = 1e-8
    hidden: tuple[int, ...] | None = None
    prob_scale: float | None = None

    def __post_init__(self):
        if self.env not in envs.ENVIRONMENTS:
            raise ConfigurationError(f"unknown env {self.env!r}")
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.episodes < 1:
            raise ConfigurationError(f"episodes must be >= 1, got {self.episodes}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.depth < 1:
            raise ConfigurationError(f"depth must be >= 1, got {self.depth}")
        if self.lr is None:
            object.__setattr__(self, "lr", DEFAULT_LR[self.mode])
        if not self.lr > 0:
            raise ConfigurationError(f"learning rate must be positive, got {self.lr}")
        if self.hidden is not None:
            object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    @property
    def policy_spec(self) -> DenseNetSpec:
        return policy_spec_for(self.env, self.hidden)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.policy_spec.layer_sizes[1:-1])
        return d


@dataclass
class Trajectory:
    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    returns: np.ndarray
    normalized_returns: np.ndarray

    def __len__(self):
        return len(self.actions)

    @property
    def total_reward(self) -> float:
        return float(np.sum(self.rewards))


def compute_returns(rewards, gamma: float) -> np.ndarray:
    rewards = np.asarray(rewards, dtype=np.float64)
    out = np.empty_like(rewards)
    running = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        running = rewards[t] + gamma * running
        out[t] = running
    return out


def normalize_returns(returns, eps: float = 1e-8) -> np.ndarray:
    returns = np.asarray(returns, dtype=np.float64)
    return (returns - returns.mean()) / (returns.std() + eps)


def make_trajectory(observations, actions, rewards, gamma: float, eps: float = 1e-8) -> Trajectory:
    returns = compute_returns(rewards, gamma)
    return Trajectory(
        np.asarray(observations, dtype=np.float64),
        np.asarray(actions, dtype=np.int64),
        np.asarray(rewards, dtype=np.float64),
        returns,
        normalize_returns(returns, eps),
    )


def rollout(env, policy_spec: DenseNetSpec, theta: np.ndarray, rng: np.random.Generator,
            gamma: float = 0.99, eps: float = 1e-8) -> Trajectory:
    """Play one episode, sampling actions from the softmax policy."""
    policy = make_policy(policy_spec, theta)
    n_actions = policy_spec.n_outputs
    obs = env.reset(rng)
    observations, actions, rewards = [], [], []
    done = False
    while not done:
        p = policy(obs)
        u = rng.random()
        a, acc = 0, p[0]
        while u >= acc and a < n_actions - 1:
            a += 1
            acc += p[a]
        res = env.step(a)
        observations.append(obs)
        actions.append(a)
        rewards.append(res.reward)
        obs, done = res.observation, res.done
    return make_trajectory(observations, actions, rewards, gamma, eps)


def episode_loss_and_grad_theta(policy_spec: DenseNetSpec, theta: np.ndarray, traj: Trajectory):
    """``-sum_t log pi(a_t|s_t) * R'_t`` and its gradient w.r.t. the policy weights."""
    z = dense.logits(policy_spec, theta, traj.observations)
    logp = dense.log_softmax(z)
    steps = np.arange(len(traj))
    loss = -float(np.sum(logp[steps, traj.actions] * traj.normalized_returns))
    # fused softmax + NLL: d loss / d logits = (pi - onehot(a)) * R'
    upstream = np.exp(logp)
    upstream[steps, traj.actions] -= 1.0
    upstream *= traj.normalized_returns[:, None]
    grad, _ = dense.backward(policy_spec, theta, traj.observations, upstream, through_head=False)
    return loss, grad


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    total_reward: float
    loss: float
    delta_theta_sq_cum: float
    elapsed_ms: float


@dataclass
class TrainLog:
    records: list[EpisodeRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([r.total_reward for r in self.records])

    def last_average(self, window: int) -> float:
        return float(np.mean(self.rewards[-window:]))

    def running_average(self, window: int) -> np.ndarray:
        """Mean of the trailing ``window`` rewards at every episode (shorter at the start)."""
        r = self.rewards
        c = np.concatenate([[0.0], np.cumsum(r)])
        idx = np.arange(1, len(r) + 1)
        lo = np.maximum(idx - window, 0)
        return (c[idx] - c[lo]) / (idx - lo)


@dataclass
class TrainResult:
    config: TrainConfig
    log: TrainLog
    theta: np.ndarray
    policy_spec: DenseNetSpec
    circuit: object = None
    mapping: np.ndarray | None = None

    @property
    def n_qubits(self) -> int | None:
        return None if self.circuit is None else self.circuit.n


class _ClassicalParams:
    def __init__(self, spec, rng):
        self.params = dense.init_weights(spec, rng)

    def theta(self):
        return self.params

    def grad(self, grad_theta):
        return grad_theta


class _QTParams:
    def __init__(self, spec, depth, rng, prob_scale=None):
        from . import generator

        self._gen = generator
        self.cfg = generator.QTConfig.for_policy(spec, depth, prob_scale)
        circuit, mapping = generator.init_params(self.cfg, rng)
        self._n_angles = circuit.size
        self._shape = circuit.angles.shape
        self.params = np.concatenate([circuit.angles.ravel(), mapping])

    def split(self):
        angles = self.params[:self._n_angles].reshape(self._shape)
        return self._gen.CircuitParams(angles), self.params[self._n_angles:].copy()

    def theta(self):
        return self._gen.generate_theta(*self.split(), self.cfg).values

    def grad(self, grad_theta):
        g_circ, g_map = self._gen.qt_backward(*self.split(), self.cfg, grad_theta)
        return np.concatenate([g_circ.ravel(), g_map])


def train(cfg: TrainConfig, callback=None) -> TrainResult:
    """Run ``cfg.episodes`` REINFORCE episodes; deterministic given ``cfg.seed``.

    ``callback(record)`` is called after every episode. A non-finite loss or
    gradient raises :class:`NumericalError` naming the episode.
    """
    rng = np.random.default_rng(cfg.seed)
    spec = cfg.policy_spec
    env = envs.make(cfg.env)
    if cfg.mode == "classical":
        holder = _ClassicalParams(spec, rng)
    else:
        holder = _QTParams(spec, cfg.depth, rng, cfg.prob_scale)
    adam = AdamState.zeros(holder.params.size, lr=cfg.lr)

    log = TrainLog()
    prev_theta = None
    cum = 0.0
    t0 = time.perf_counter()
    for ep in range(cfg.episodes):
        theta = holder.theta()
        if prev_theta is not None:
            cum += float(np.sum((theta - prev_theta) ** 2))
        prev_theta = theta
        traj = rollout(env, spec, theta, rng, cfg.gamma, cfg.norm_eps)
        loss, g_theta = episode_loss_and_grad_theta(spec, theta, traj)
        if not (np.isfinite(loss) and np.all(np.isfinite(g_theta))):
            raise NumericalError(f"non-finite loss or gradient at episode {ep}")
        try:
            holder.params, adam = dense.adam_step(adam, holder.params, holder.grad(g_theta))
        except NumericalError as exc:
            raise NumericalError(f"episode {ep}: {exc}") from exc
        rec = EpisodeRecord(ep, traj.total_reward, loss, cum, (time.perf_counter() - t0) * 1e3)
        log.records.append(rec)
        if callback is not None:
            callback(rec)

    result = TrainResult(cfg, log, np.array(holder.theta()), spec)
    if cfg.mode == "qtrl":
        result.circuit, result.mapping = holder.split()
    return result
