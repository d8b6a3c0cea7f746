"""Classical and single-qubit hybrid actor-critic agents.

Both families expose the same three entry points: :func:`act`,
:func:`critic_value` and :func:`episode_update`. The hybrid agent feeds the
arctan-squashed observation through two independent one-qubit circuits (actor
and critic), copies each scalar expectation into all inputs of a small dense
head, and trains the circuit angles through the parameter-shift rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Union

import numpy as np

from .neural import AdamState, Mlp, adam_step, backward, forward, huber, huber_grad, softmax
from .quantum import Backend, EncodingAngles, encode_batch, encode_features, parameter_shift_grad_batch

if TYPE_CHECKING:
    from .training import Trajectory

N_ACTIONS = 2
OBS_DIM = 3
CLASSICAL_HIDDEN = (128, 256)
HEAD_COPIES = 32
HEAD_HIDDEN = 32


@dataclass
class ClassicalActorCritic:
    actor: Mlp
    critic: Mlp

    @classmethod
    def init(cls, rng: np.random.Generator) -> "ClassicalActorCritic":
        sizes = [OBS_DIM, *CLASSICAL_HIDDEN]
        return cls(Mlp.init(sizes + [N_ACTIONS], rng), Mlp.init(sizes + [1], rng))

    kind = "classical"

    def actor_params(self) -> list[np.ndarray]:
        return self.actor.parameters()

    def critic_params(self) -> list[np.ndarray]:
        return self.critic.parameters()


@dataclass
class HybridActorCritic:
    theta_actor: np.ndarray  # shape (1,), radians
    theta_critic: np.ndarray  # shape (1,), radians
    actor_head: Mlp
    critic_head: Mlp

    kind = "hybrid"

    def __post_init__(self):
        self.theta_actor = np.atleast_1d(np.asarray(self.theta_actor, dtype=np.float64)).copy()
        self.theta_critic = np.atleast_1d(np.asarray(self.theta_critic, dtype=np.float64)).copy()

    @classmethod
    def init(
        cls, head_rng: np.random.Generator, circuit_rng: np.random.Generator | None = None
    ) -> "HybridActorCritic":
        circuit_rng = circuit_rng if circuit_rng is not None else head_rng
        theta_a, theta_c = circuit_rng.uniform(-np.pi, np.pi, size=2)
        return cls(
            np.array([theta_a]),
            np.array([theta_c]),
            Mlp.init([HEAD_COPIES, HEAD_HIDDEN, N_ACTIONS], head_rng),
            Mlp.init([HEAD_COPIES, HEAD_HIDDEN, 1], head_rng),
        )

    def actor_params(self) -> list[np.ndarray]:
        return [self.theta_actor, *self.actor_head.parameters()]

    def critic_params(self) -> list[np.ndarray]:
        return [self.theta_critic, *self.critic_head.parameters()]


Agent = Union[ClassicalActorCritic, HybridActorCritic]


@dataclass
class PolicyOutput:
    action_probs: np.ndarray
    value: float
    log_prob: float
    angles: EncodingAngles | None = None  # hybrid only
    f_actor: float | None = None  # circuit outputs fed to the heads
    f_critic: float | None = None


@dataclass
class LossReport:
    actor_loss: float
    critic_loss: float
    grad_theta_actor: float | None = None
    grad_theta_critic: float | None = None


def _copies(f):
    """Replicate circuit output(s) across all head inputs."""
    f = np.asarray(f, dtype=np.float64)
    return np.repeat(f[..., None], HEAD_COPIES, axis=-1)


def act(
    agent: Agent,
    obs,
    backend: Backend,
    rng: np.random.Generator,
    shot_rng: np.random.Generator | None = None,
    greedy: bool = False,
) -> tuple[int, PolicyOutput]:
    """Choose an action for one observation and report the critic's value.

    ``rng`` drives action sampling, ``shot_rng`` (default ``rng``) the shot
    draws of sampled backends.
    """
    shot_rng = shot_rng if shot_rng is not None else rng
    if isinstance(agent, HybridActorCritic):
        angles = encode_features(obs)
        f_a = backend.evaluate(angles, float(agent.theta_actor[0]), shot_rng)
        f_c = backend.evaluate(angles, float(agent.theta_critic[0]), shot_rng)
        logits, _ = forward(agent.actor_head, _copies(f_a))
        value, _ = forward(agent.critic_head, _copies(f_c))
        extra = dict(angles=angles, f_actor=f_a, f_critic=f_c)
    else:
        x = np.asarray(obs, dtype=np.float64)
        logits, _ = forward(agent.actor, x)
        value, _ = forward(agent.critic, x)
        extra = {}
    probs = softmax(logits)
    if greedy:
        action = int(np.argmax(probs))
    else:
        action = int(rng.random() >= probs[0])
    log_prob = float(np.log(probs[action])) if probs[action] > 0 else -np.inf
    return action, PolicyOutput(probs, float(value[0]), log_prob, **extra)


def critic_value(
    agent: Agent, obs, backend: Backend, rng: np.random.Generator | None = None
) -> float:
    if isinstance(agent, HybridActorCritic):
        f_c = backend.evaluate(encode_features(obs), float(agent.theta_critic[0]), rng)
        value, _ = forward(agent.critic_head, _copies(f_c))
    else:
        value, _ = forward(agent.critic, np.asarray(obs, dtype=np.float64))
    return float(value[0])


@dataclass
class Optimizers:
    actor: AdamState
    critic: AdamState

    @classmethod
    def adam(cls, lr_actor: float, lr_critic: float) -> "Optimizers":
        return cls(AdamState(lr=lr_actor), AdamState(lr=lr_critic))


def episode_gradients(
    agent: Agent,
    trajectory: "Trajectory",
    returns,
    backend: Backend,
    rng: np.random.Generator | None = None,
    delta: float = 1.0,
) -> tuple[list[np.ndarray], list[np.ndarray], LossReport]:
    """Gradients of the episode's actor and critic losses.

    Advantages use the values stored during the rollout and are treated as
    constants; the critic regresses onto the returns with a Huber loss.
    Returns ``(actor_grads, critic_grads, report)`` aligned with
    ``agent.actor_params()`` and ``agent.critic_params()``.
    """
    T = len(trajectory)
    if T == 0:
        raise ValueError("empty trajectory")
    returns = np.asarray(returns, dtype=np.float64)
    values_stored = np.asarray(trajectory.values, dtype=np.float64)
    actions = np.asarray(trajectory.actions, dtype=np.int64)
    advantages = returns - values_stored

    hybrid = isinstance(agent, HybridActorCritic)
    if hybrid:
        actor_net, critic_net = agent.actor_head, agent.critic_head
        actor_in = _copies(trajectory.f_actor)
        critic_in = _copies(trajectory.f_critic)
    else:
        actor_net, critic_net = agent.actor, agent.critic
        actor_in = critic_in = np.asarray(trajectory.observations, dtype=np.float64)

    logits, actor_cache = forward(actor_net, actor_in)
    probs = softmax(logits)
    idx = np.arange(T)
    log_probs = np.log(np.maximum(probs[idx, actions], 1e-300))
    actor_loss = -float(np.mean(advantages * log_probs))
    onehot = np.zeros_like(probs)
    onehot[idx, actions] = 1.0
    d_logits = -(advantages / T)[:, None] * (onehot - probs)
    actor_g = backward(actor_net, actor_cache, d_logits)

    values, critic_cache = forward(critic_net, critic_in)
    err = returns - values[:, 0]
    critic_loss = float(np.mean(huber(err, delta)))
    d_values = (-huber_grad(err, delta) / T)[:, None]
    critic_g = backward(critic_net, critic_cache, d_values)

    actor_grads = actor_g.flat()
    critic_grads = critic_g.flat()
    report = LossReport(actor_loss, critic_loss)
    if hybrid:
        betas = encode_batch(trajectory.observations)
        dl_df_actor = actor_g.input.sum(axis=1)
        dl_df_critic = critic_g.input.sum(axis=1)
        df_dtheta_a = parameter_shift_grad_batch(betas, float(agent.theta_actor[0]), backend, rng)
        df_dtheta_c = parameter_shift_grad_batch(betas, float(agent.theta_critic[0]), backend, rng)
        g_ta = float(np.dot(dl_df_actor, df_dtheta_a))
        g_tc = float(np.dot(dl_df_critic, df_dtheta_c))
        actor_grads = [np.array([g_ta]), *actor_grads]
        critic_grads = [np.array([g_tc]), *critic_grads]
        report.grad_theta_actor = g_ta
        report.grad_theta_critic = g_tc
    return actor_grads, critic_grads, report


def episode_update(
    agent: Agent,
    trajectory: "Trajectory",
    returns,
    gamma: float,
    optimizers: Optimizers,
    backend: Backend,
    rng: np.random.Generator | None = None,
    delta: float = 1.0,
) -> LossReport:
    """One Adam step per network from a finished episode.

    ``gamma`` is already folded into ``returns``; it is accepted so call sites
    read like the algorithm they implement.
    """
    actor_grads, critic_grads, report = episode_gradients(
        agent, trajectory, returns, backend, rng, delta
    )
    adam_step(agent.actor_params(), actor_grads, optimizers.actor)
    adam_step(agent.critic_params(), critic_grads, optimizers.critic)
    for net in _nets(agent):
        net.version += 1
    return report


def _nets(agent: Agent) -> tuple[Mlp, Mlp]:
    if isinstance(agent, HybridActorCritic):
        return agent.actor_head, agent.critic_head
    return agent.actor, agent.critic
