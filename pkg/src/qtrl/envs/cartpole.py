"""CartPole-v1 dynamics (Euler integration, reward 1 per step, 500-step cap)."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..errors import UsageError
from . import CONSTANTS, StepResult

_C = CONSTANTS["cartpole"]
GRAVITY = _C["gravity"]
CART_MASS = _C["cart_mass"]
POLE_MASS = _C["pole_mass"]
HALF_LENGTH = _C["half_length"]
FORCE = _C["force"]
TAU = _C["tau"]
ANGLE_LIMIT = _C["angle_limit_deg"] * 2 * math.pi / 360
POSITION_LIMIT = _C["position_limit"]
STEP_CAP = _C["step_cap"]
RESET_BOUND = _C["reset_bound"]

TOTAL_MASS = CART_MASS + POLE_MASS
POLE_MASS_LENGTH = POLE_MASS * HALF_LENGTH

OBS_SIZE = 4
N_ACTIONS = 2


@dataclass(frozen=True)
class CartPoleState:
    x: float
    x_dot: float
    theta: float
    theta_dot: float
    steps: int = 0

    @property
    def failed(self) -> bool:
        return abs(self.x) > POSITION_LIMIT or abs(self.theta) > ANGLE_LIMIT

    @property
    def done(self) -> bool:
        return self.failed or self.steps >= STEP_CAP

    def observation(self) -> np.ndarray:
        return np.array([self.x, self.x_dot, self.theta, self.theta_dot])


def cartpole_reset(rng: np.random.Generator) -> tuple[CartPoleState, np.ndarray]:
    x, x_dot, theta, theta_dot = rng.uniform(-RESET_BOUND, RESET_BOUND, size=4)
    state = CartPoleState(float(x), float(x_dot), float(theta), float(theta_dot))
    return state, state.observation()


def cartpole_step(state: CartPoleState, action: int) -> tuple[CartPoleState, StepResult]:
    if state.done:
        raise UsageError("cannot step a finished CartPole episode; reset first")
    if action not in (0, 1):
        raise ValueError(f"CartPole action must be 0 or 1, got {action!r}")
    force = FORCE if action == 1 else -FORCE
    cos_t = math.cos(state.theta)
    sin_t = math.sin(state.theta)
    temp = (force + POLE_MASS_LENGTH * state.theta_dot ** 2 * sin_t) / TOTAL_MASS
    theta_acc = (GRAVITY * sin_t - cos_t * temp) / (
        HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos_t ** 2 / TOTAL_MASS)
    )
    x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_t / TOTAL_MASS
    # positions advance with the pre-update velocities
    new = replace(
        state,
        x=state.x + TAU * state.x_dot,
        x_dot=state.x_dot + TAU * x_acc,
        theta=state.theta + TAU * state.theta_dot,
        theta_dot=state.theta_dot + TAU * theta_acc,
        steps=state.steps + 1,
    )
    return new, StepResult(new.observation(), 1.0, new.done)


class CartPole:
    """Stateful wrapper used by the training and evaluation loops."""

    name = "cartpole"
    obs_size = OBS_SIZE
    n_actions = N_ACTIONS

    def __init__(self):
        self.state: CartPoleState | None = None

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self.state, obs = cartpole_reset(rng)
        return obs

    def step(self, action: int) -> StepResult:
        if self.state is None:
            raise UsageError("reset() must be called before step()")
        self.state, result = cartpole_step(self.state, action)
        return result
