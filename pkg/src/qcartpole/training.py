"""Episodic actor-critic training loop, success detection and checkpoints."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dynamics
from .agents import (
    Agent,
    ClassicalActorCritic,
    HybridActorCritic,
    Optimizers,
    act,
    critic_value,
    episode_update,
)
from .dynamics import EnvConfig
from .neural import DenseLayer, Mlp
from .quantum import Backend, NoiseParams

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


def stream(seed: int, label: str) -> np.random.Generator:
    """Independent generator for ``(seed, label)``; labels never collide in practice."""
    digest = hashlib.sha256(label.encode()).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([int(seed), *words]))


@dataclass
class Trajectory:
    observations: list = field(default_factory=list)  # reduced states
    actions: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    values: list = field(default_factory=list)
    log_probs: list = field(default_factory=list)
    dones: list = field(default_factory=list)  # 1 only on a bounds violation
    f_actor: list = field(default_factory=list)
    f_critic: list = field(default_factory=list)
    truncated: bool = False
    bootstrap_value: float = 0.0

    def __len__(self) -> int:
        return len(self.rewards)

    @property
    def episode_return(self) -> float:
        return float(sum(self.rewards))

    def duration(self, control_freq: float) -> float:
        return len(self) / control_freq


def run_episode(
    agent: Agent,
    env_config: EnvConfig,
    backend: Backend,
    rng: np.random.Generator,
    env_rng: np.random.Generator | None = None,
    shot_rng: np.random.Generator | None = None,
    greedy: bool = False,
) -> Trajectory:
    """Roll out one episode from a fresh reset until a bound is crossed or time runs out.

    ``rng`` samples actions; ``env_rng`` and ``shot_rng`` default to it.
    """
    env_rng = env_rng if env_rng is not None else rng
    shot_rng = shot_rng if shot_rng is not None else rng
    traj = Trajectory()
    state = dynamics.reset(env_rng, env_config)
    for t in range(env_config.max_steps):
        obs = dynamics.reduced_observation(state)
        action, out = act(agent, obs, backend, rng, shot_rng, greedy=greedy)
        res = dynamics.step(state, action, env_config, t)
        traj.observations.append(obs)
        traj.actions.append(action)
        traj.rewards.append(res.reward)
        traj.values.append(out.value)
        traj.log_probs.append(out.log_prob)
        traj.dones.append(1.0 if res.terminated else 0.0)
        if out.f_actor is not None:
            traj.f_actor.append(out.f_actor)
            traj.f_critic.append(out.f_critic)
        state = res.next_state
        if res.terminated:
            break
        if res.truncated:
            traj.truncated = True
            traj.bootstrap_value = critic_value(
                agent, dynamics.reduced_observation(state), backend, shot_rng
            )
            break
    return traj


def compute_returns(rewards, dones, gamma: float, bootstrap_value: float = 0.0) -> np.ndarray:
    """Backward recursion R_k = r_k + gamma * R_{k+1} * (1 - d_k), seeded with the bootstrap."""
    n = len(rewards)
    if n == 0:
        raise ValueError("empty trajectory")
    out = np.empty(n)
    r_next = float(bootstrap_value)
    for k in range(n - 1, -1, -1):
        r_next = rewards[k] + gamma * r_next * (1.0 - dones[k])
        out[k] = r_next
    return out


@dataclass
class TrainConfig:
    agent: str = "hybrid"  # "hybrid" | "classical"
    gamma: float = 0.99
    lr_actor: float = 0.05
    lr_critic: float = 0.05
    episodes: int = 500
    control_freq: float = 50.0
    episode_duration: float = 10.0
    backend: Backend = field(default_factory=Backend.analytic)
    seed: int = 0
    success_window: int = 100
    stop_on_success: bool = True
    huber_delta: float = 1.0

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.agent not in ("hybrid", "classical"):
            raise ValueError(f"unknown agent kind {self.agent!r}")

    @property
    def env(self) -> EnvConfig:
        return EnvConfig(control_freq=self.control_freq, episode_duration=self.episode_duration)

    @property
    def success_return(self) -> float:
        return float(self.env.max_steps)


def check_success(returns, config: TrainConfig) -> bool:
    window = config.success_window
    if len(returns) < window:
        return False
    return float(np.mean(returns[-window:])) >= config.success_return


def build_agent(kind: str, seed: int) -> Agent:
    if kind == "classical":
        return ClassicalActorCritic.init(stream(seed, "init.classical"))
    if kind == "hybrid":
        return HybridActorCritic.init(stream(seed, "init.classical"), stream(seed, "init.quantum"))
    raise ValueError(f"unknown agent kind {kind!r}")


@dataclass
class RunSummary:
    returns: list[float]
    durations: list[float]  # seconds of simulated time per episode
    episodes_to_solve: int | None
    wall_time: float

    @property
    def solved(self) -> bool:
        return self.episodes_to_solve is not None


@dataclass
class Checkpoint:
    meta: dict
    agent: Agent


def train_agent(agent: Agent, config: TrainConfig) -> tuple[RunSummary, Checkpoint]:
    """Train until the success window is full of perfect episodes or the cap is hit."""
    start = time.perf_counter()
    env = config.env
    backend = config.backend
    policy_rng = stream(config.seed, "policy")
    env_rng = stream(config.seed, "env")
    shot_rng = stream(config.seed, "shots")
    opt = Optimizers.adam(config.lr_actor, config.lr_critic)

    returns: list[float] = []
    durations: list[float] = []
    solved_at = None
    for episode in range(1, config.episodes + 1):
        traj = run_episode(agent, env, backend, policy_rng, env_rng, shot_rng)
        rets = compute_returns(traj.rewards, traj.dones, config.gamma, traj.bootstrap_value)
        episode_update(
            agent, traj, rets, config.gamma, opt, backend, shot_rng, config.huber_delta
        )
        returns.append(traj.episode_return)
        durations.append(traj.duration(env.control_freq))
        if solved_at is None and check_success(returns, config):
            solved_at = episode
            log.info("seed %d solved after %d episodes", config.seed, episode)
            if config.stop_on_success:
                break

    summary = RunSummary(returns, durations, solved_at, time.perf_counter() - start)
    meta = {
        "agent": agent.kind,
        "seed": config.seed,
        "control_freq_hz": config.control_freq,
        "backend": backend.kind,
        "shots": backend.n_shots,
        "gamma": config.gamma,
        "lr_actor": config.lr_actor,
        "lr_critic": config.lr_critic,
        "episodes_trained": len(returns),
        "solved_at": solved_at,
    }
    return summary, Checkpoint(meta, agent)


# -- checkpoints -------------------------------------------------------------


class CheckpointError(ValueError):
    """Checkpoint file is malformed or incompatible."""


class CheckpointVersionError(CheckpointError):
    pass


def _mlp_to_json(net: Mlp) -> dict:
    return {
        "layers": [
            {"weights": l.weights.tolist(), "biases": l.biases.tolist(), "activation": l.activation}
            for l in net.layers
        ]
    }


def _mlp_from_json(obj: dict) -> Mlp:
    return Mlp(
        [
            DenseLayer(np.array(l["weights"], dtype=np.float64), np.array(l["biases"], dtype=np.float64), l["activation"])
            for l in obj["layers"]
        ]
    )


def checkpoint_to_dict(ckpt: Checkpoint) -> dict:
    agent = ckpt.agent
    doc = {"version": CHECKPOINT_VERSION, "meta": dict(ckpt.meta)}
    doc["meta"]["agent"] = agent.kind
    if isinstance(agent, HybridActorCritic):
        doc["actor"] = _mlp_to_json(agent.actor_head)
        doc["critic"] = _mlp_to_json(agent.critic_head)
        doc["theta_actor"] = float(agent.theta_actor[0])
        doc["theta_critic"] = float(agent.theta_critic[0])
    else:
        doc["actor"] = _mlp_to_json(agent.actor)
        doc["critic"] = _mlp_to_json(agent.critic)
    return doc


def checkpoint_from_dict(doc: dict) -> Checkpoint:
    if not isinstance(doc, dict) or "version" not in doc:
        raise CheckpointError("not a checkpoint document")
    if doc["version"] != CHECKPOINT_VERSION:
        raise CheckpointVersionError(
            f"checkpoint version {doc['version']!r}, expected {CHECKPOINT_VERSION}"
        )
    try:
        meta = dict(doc["meta"])
        actor = _mlp_from_json(doc["actor"])
        critic = _mlp_from_json(doc["critic"])
        if "theta_actor" in doc:
            agent = HybridActorCritic(doc["theta_actor"], doc["theta_critic"], actor, critic)
        else:
            agent = ClassicalActorCritic(actor, critic)
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc}") from exc
    return Checkpoint(meta, agent)


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(checkpoint_to_dict(ckpt)))
    os.replace(tmp, path)


def load_checkpoint(path) -> Checkpoint:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"cannot parse checkpoint {path}: {exc}") from exc
    return checkpoint_from_dict(doc)


def backend_from_meta(meta: dict, noise: NoiseParams | None = None) -> Backend:
    kind = meta.get("backend", "analytic")
    if kind == "analytic":
        return Backend.analytic()
    if kind == "sampled":
        return Backend.sampled(meta["shots"])
    return Backend.sampled_noisy(meta["shots"], noise)
