"""Seeded, dependency-free CartPole-v1 and MiniGrid-Empty-5x5 environments."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources

import numpy as np


def constants_bytes() -> bytes:
    return resources.files("qtrl").joinpath("env_constants.json").read_bytes()


CONSTANTS = json.loads(constants_bytes())


def constants_hash() -> str:
    """Git blob hash of the constants file."""
    data = constants_bytes()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool


from .cartpole import CartPole, CartPoleState, cartpole_reset, cartpole_step  # noqa: E402
from .minigrid import MiniGrid, MiniGridState, minigrid_reset, minigrid_step  # noqa: E402

ENVIRONMENTS = {"cartpole": CartPole, "minigrid": MiniGrid}


def make(name: str):
    try:
        return ENVIRONMENTS[name]()
    except KeyError:
        raise ValueError(f"unknown environment {name!r}; choose from {sorted(ENVIRONMENTS)}") from None


__all__ = [
    "CONSTANTS", "StepResult", "constants_hash", "make",
    "CartPole", "CartPoleState", "cartpole_reset", "cartpole_step",
    "MiniGrid", "MiniGridState", "minigrid_reset", "minigrid_step",
]
