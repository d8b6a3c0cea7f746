"""CartPole physics with a configurable control frequency.

Explicit-Euler cart-pole with the classic constants. The time step is tied to
the control frequency and an episode always lasts the same amount of simulated
time, so the step budget grows with the frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

LEFT = 0
RIGHT = 1


class CartState(NamedTuple):
    x: float
    x_dot: float
    phi: float
    phi_dot: float


class ReducedState(NamedTuple):
    """Agent-facing observation: the cart state without the cart position."""

    x_dot: float
    phi: float
    phi_dot: float


@dataclass(frozen=True)
class EnvConfig:
    control_freq: float = 50.0
    episode_duration: float = 10.0
    x_limit: float = 2.4
    phi_limit: float = 0.418
    reward_band: float = 0.2
    gravity: float = 9.8
    cart_mass: float = 1.0
    pole_mass: float = 0.1
    half_length: float = 0.5
    force_mag: float = 10.0
    init_range: float = 0.05

    def __post_init__(self):
        if not self.control_freq > 0:
            raise ValueError(f"control_freq must be positive, got {self.control_freq}")
        if not self.episode_duration > 0:
            raise ValueError("episode_duration must be positive")

    @property
    def dt(self) -> float:
        return 1.0 / self.control_freq

    @property
    def max_steps(self) -> int:
        return int(round(self.episode_duration * self.control_freq))


class StepResult(NamedTuple):
    next_state: CartState
    reward: float
    terminated: bool
    truncated: bool


class EpisodeOverError(RuntimeError):
    """Raised when stepping an episode that has already ended."""


def reset(rng: np.random.Generator, config: EnvConfig) -> CartState:
    """Draw an initial state, each component uniform on [-0.05, 0.05]."""
    r = config.init_range
    x, x_dot, phi, phi_dot = rng.uniform(-r, r, size=4)
    return CartState(float(x), float(x_dot), float(phi), float(phi_dot))


def accelerations(state: CartState, force: float, config: EnvConfig) -> tuple[float, float]:
    """Cart and pole accelerations (x_ddot, phi_ddot) under a horizontal force."""
    total_mass = config.cart_mass + config.pole_mass
    pm_l = config.pole_mass * config.half_length
    cos_phi = math.cos(state.phi)
    sin_phi = math.sin(state.phi)
    temp = (force + pm_l * state.phi_dot**2 * sin_phi) / total_mass
    phi_acc = (config.gravity * sin_phi - cos_phi * temp) / (
        config.half_length * (4.0 / 3.0 - config.pole_mass * cos_phi**2 / total_mass)
    )
    x_acc = temp - pm_l * phi_acc * cos_phi / total_mass
    return x_acc, phi_acc


def out_of_bounds(state: CartState, config: EnvConfig) -> bool:
    return abs(state.x) > config.x_limit or abs(state.phi) > config.phi_limit


def step(state: CartState, action: int, config: EnvConfig, t: int = 0) -> StepResult:
    """Advance one control interval.

    ``t`` is the number of steps already taken in the episode; it is only used
    to raise the time-limit flag.
    """
    if out_of_bounds(state, config):
        raise EpisodeOverError("cannot step a terminated episode")
    if t >= config.max_steps:
        raise EpisodeOverError("cannot step past the time limit")
    if action not in (LEFT, RIGHT):
        raise ValueError(f"action must be 0 (left) or 1 (right), got {action!r}")

    force = config.force_mag if action == RIGHT else -config.force_mag
    x_acc, phi_acc = accelerations(state, force, config)
    dt = config.dt
    nxt = CartState(
        state.x + dt * state.x_dot,
        state.x_dot + dt * x_acc,
        state.phi + dt * state.phi_dot,
        state.phi_dot + dt * phi_acc,
    )
    reward = 1.0 if abs(nxt.phi) <= config.reward_band else 0.0
    terminated = out_of_bounds(nxt, config)
    truncated = (t + 1) >= config.max_steps and not terminated
    return StepResult(nxt, reward, terminated, truncated)


def reduced_observation(state: CartState) -> ReducedState:
    return ReducedState(state.x_dot, state.phi, state.phi_dot)
