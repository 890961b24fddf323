"""MiniGrid-Empty-5x5: walled 5x5 room, agent starts at (1, 1) facing right,
goal at (3, 3). Observations are the 7x7x3 egocentric view flattened to 147
raw (object, color, state) values.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from ..errors import UsageError
from . import CONSTANTS, StepResult

_C = CONSTANTS["minigrid"]
GRID_SIZE = _C["grid_size"]
MAX_STEPS = _C["max_steps"]
START_POS = tuple(_C["start_pos"])
START_DIR = _C["start_dir"]
GOAL_POS = tuple(_C["goal_pos"])
VIEW_SIZE = _C["view_size"]
REWARD_SCALE = _C["reward_scale"]

OBS_SIZE = VIEW_SIZE * VIEW_SIZE * 3
N_ACTIONS = 3
LEFT, RIGHT, FORWARD = 0, 1, 2

# directions: right, down, left, up as (dx, dy); y grows downwards
DIR_VEC = ((1, 0), (0, 1), (-1, 0), (0, -1))

UNSEEN, EMPTY, WALL, GOAL = 0, 1, 2, 8
GOAL_COLOR = 5


def _cell(x, y):
    if not (0 <= x < GRID_SIZE and 0 <= y < GRID_SIZE):
        return (UNSEEN, 0, 0)
    if x in (0, GRID_SIZE - 1) or y in (0, GRID_SIZE - 1):
        return (WALL, 0, 0)
    if (x, y) == GOAL_POS:
        return (GOAL, GOAL_COLOR, 0)
    return (EMPTY, 0, 0)


@lru_cache(maxsize=None)
def _view(pos: tuple[int, int], direction: int) -> np.ndarray:
    """Egocentric view indexed [column, row, channel]; agent at column 3,
    bottom row, facing up. Its own cell shows as empty floor."""
    dx, dy = DIR_VEC[direction]
    rx, ry = -dy, dx
    half = VIEW_SIZE // 2
    view = np.zeros((VIEW_SIZE, VIEW_SIZE, 3))
    for vx in range(VIEW_SIZE):
        for vy in range(VIEW_SIZE):
            fwd = VIEW_SIZE - 1 - vy
            side = vx - half
            view[vx, vy] = _cell(pos[0] + fwd * dx + side * rx, pos[1] + fwd * dy + side * ry)
    view[half, VIEW_SIZE - 1] = (EMPTY, 0, 0)
    obs = view.reshape(-1)
    obs.flags.writeable = False
    return obs


@dataclass(frozen=True)
class MiniGridState:
    agent_pos: tuple[int, int] = START_POS
    agent_dir: int = START_DIR
    steps: int = 0
    done: bool = False
    goal_pos: tuple[int, int] = GOAL_POS

    def observation(self) -> np.ndarray:
        return _view(self.agent_pos, self.agent_dir).copy()


def minigrid_reset(rng: np.random.Generator | None = None) -> tuple[MiniGridState, np.ndarray]:
    # the layout is fixed, so the generator is accepted but not consumed
    state = MiniGridState()
    return state, state.observation()


def goal_reward(steps: int) -> float:
    return 1.0 - REWARD_SCALE * (steps / MAX_STEPS)


def minigrid_step(state: MiniGridState, action: int) -> tuple[MiniGridState, StepResult]:
    if state.done:
        raise UsageError("cannot step a finished MiniGrid episode; reset first")
    steps = state.steps + 1
    pos, direction = state.agent_pos, state.agent_dir
    reward, done = 0.0, False
    if action == LEFT:
        direction = (direction - 1) % 4
    elif action == RIGHT:
        direction = (direction + 1) % 4
    elif action == FORWARD:
        dx, dy = DIR_VEC[direction]
        ahead = (pos[0] + dx, pos[1] + dy)
        kind = _cell(*ahead)[0]
        if kind != WALL:
            pos = ahead
        if kind == GOAL:
            reward, done = goal_reward(steps), True
    else:
        raise ValueError(f"MiniGrid action must be 0, 1 or 2, got {action!r}")
    if steps >= MAX_STEPS:
        done = True
    new = replace(state, agent_pos=pos, agent_dir=direction, steps=steps, done=done)
    return new, StepResult(new.observation(), reward, done)


class MiniGrid:
    name = "minigrid"
    obs_size = OBS_SIZE
    n_actions = N_ACTIONS

    def __init__(self):
        self.state: MiniGridState | None = None

    def reset(self, rng: np.random.Generator | None = None) -> np.ndarray:
        self.state, obs = minigrid_reset(rng)
        return obs

    def step(self, action: int) -> StepResult:
        if self.state is None:
            raise UsageError("reset() must be called before step()")
        self.state, result = minigrid_step(self.state, action)
        return result
