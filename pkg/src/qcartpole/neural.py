"""Small dense networks with hand-written backpropagation, plus Adam.

Everything runs in float64 on plain numpy arrays. Forward passes accept a
single input vector or a batch (rows are samples); backward sums parameter
gradients over the batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("relu", "identity")


class StaleCacheError(RuntimeError):
    """The network changed between forward and backward."""


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray  # (out,)
    activation: str = "identity"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[0],):
            raise ValueError(
                f"inconsistent layer shapes {self.weights.shape} / {self.biases.shape}"
            )

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]


@dataclass
class Mlp:
    layers: list[DenseLayer]
    version: int = 0  # bumped on every parameter update

    def __post_init__(self):
        for a, b in zip(self.layers, self.layers[1:]):
            if a.n_out != b.n_in:
                raise ValueError(f"layer sizes do not chain: {a.n_out} -> {b.n_in}")

    @classmethod
    def init(cls, sizes: list[int], rng: np.random.Generator, hidden: str = "relu") -> "Mlp":
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases; linear output."""
        layers = []
        for i, (n_in, n_out) in enumerate(zip(sizes, sizes[1:])):
            bound = 1.0 / math.sqrt(n_in)
            act = hidden if i < len(sizes) - 2 else "identity"
            layers.append(
                DenseLayer(
                    rng.uniform(-bound, bound, size=(n_out, n_in)),
                    rng.uniform(-bound, bound, size=n_out),
                    act,
                )
            )
        return cls(layers)

    @classmethod
    def zeros(cls, sizes: list[int], hidden: str = "relu") -> "Mlp":
        layers = [
            DenseLayer(
                np.zeros((n_out, n_in)),
                np.zeros(n_out),
                hidden if i < len(sizes) - 2 else "identity",
            )
            for i, (n_in, n_out) in enumerate(zip(sizes, sizes[1:]))
        ]
        return cls(layers)

    @property
    def n_in(self) -> int:
        return self.layers[0].n_in

    @property
    def n_out(self) -> int:
        return self.layers[-1].n_out

    def parameters(self) -> list[np.ndarray]:
        """Flat list [W0, b0, W1, b1, ...]; arrays are live views into the net."""
        out = []
        for layer in self.layers:
            out += [layer.weights, layer.biases]
        return out

    def copy(self) -> "Mlp":
        return Mlp(
            [DenseLayer(l.weights.copy(), l.biases.copy(), l.activation) for l in self.layers]
        )


@dataclass
class ForwardCache:
    inputs: list[np.ndarray]  # input to each layer
    pre: list[np.ndarray]  # pre-activation of each layer
    batched: bool
    version: int


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    input: np.ndarray

    def flat(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out


def forward(net: Mlp, x) -> tuple[np.ndarray, ForwardCache]:
    x = np.asarray(x, dtype=np.float64)
    batched = x.ndim == 2
    if x.shape[-1] != net.n_in:
        raise ValueError(f"input has {x.shape[-1]} features, network expects {net.n_in}")
    h = x if batched else x[None, :]
    inputs, pre = [], []
    for layer in net.layers:
        inputs.append(h)
        z = h @ layer.weights.T + layer.biases
        pre.append(z)
        h = np.maximum(z, 0.0) if layer.activation == "relu" else z
    out = h if batched else h[0]
    return out, ForwardCache(inputs, pre, batched, net.version)


def backward(net: Mlp, cache: ForwardCache, output_grad) -> Gradients:
    if cache.version != net.version or len(cache.pre) != len(net.layers):
        raise StaleCacheError("forward cache does not belong to the current parameters")
    g = np.asarray(output_grad, dtype=np.float64)
    if not cache.batched:
        g = g[None, :]
    if g.shape != cache.pre[-1].shape:
        raise ValueError(f"output_grad shape {g.shape} != output shape {cache.pre[-1].shape}")
    dws, dbs = [], []
    for layer, h_in, z in zip(reversed(net.layers), reversed(cache.inputs), reversed(cache.pre)):
        if layer.activation == "relu":
            g = g * (z > 0.0)
        dws.append(g.T @ h_in)
        dbs.append(g.sum(axis=0))
        g = g @ layer.weights
    d_input = g if cache.batched else g[0]
    return Gradients(dws[::-1], dbs[::-1], d_input)


def softmax_logprob(logits, action: int) -> tuple[np.ndarray, float]:
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max()
    exps = np.exp(shifted)
    total = exps.sum()
    return exps / total, float(shifted[action] - math.log(total))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax over the last axis."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exps = np.exp(shifted)
    return exps / exps.sum(axis=-1, keepdims=True)


def huber(e, delta: float = 1.0):
    if delta <= 0:
        raise ValueError("delta must be positive")
    a = np.abs(e)
    return np.where(a < delta, 0.5 * e * e, delta * (a - 0.5 * delta))


def huber_grad(e, delta: float = 1.0):
    """d huber / d e."""
    return np.clip(e, -delta, delta)


@dataclass
class AdamState:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState):
    """Bias-corrected Adam update applied to ``params`` in place."""
    if len(params) != len(grads):
        raise ValueError(f"{len(params)} parameter arrays but {len(grads)} gradients")
    for p, g in zip(params, grads):
        if np.shape(p) != np.shape(g):
            raise ValueError(f"gradient shape {np.shape(g)} != parameter shape {np.shape(p)}")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
    return params, state
