"""Single-qubit encoding circuit: exact expectation, shot sampling and gradients.

The circuit is ``Rx(theta) Rz(b3) Ry(b2) Rz(b1) H |0>`` measured in the Z basis,
with ``Rz(l) = diag(e^{-il/2}, e^{il/2})``, ``Ry(l) = exp(-i l Y/2)`` and
``Rx(l) = exp(-i l X/2)``. Everything here is a pure function of its inputs and
an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .dynamics import ReducedState

SHIFT = math.pi / 2

_SQRT1_2 = 1.0 / math.sqrt(2.0)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT1_2
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class EncodingAngles(NamedTuple):
    beta1: float
    beta2: float
    beta3: float


class CircuitInput(NamedTuple):
    angles: EncodingAngles
    theta: float


class Amplitudes(NamedTuple):
    a0: complex
    a1: complex


class ShotCounts(NamedTuple):
    n0: int
    n1: int

    @property
    def total(self) -> int:
        return self.n0 + self.n1


@dataclass(frozen=True)
class NoiseParams:
    """Readout flips plus per-gate depolarizing shrinkage of the Bloch vector.

    ``eps01`` is P(read 1 | prepared 0), ``eps10`` is P(read 0 | prepared 1).
    """

    eps01: float = 0.0
    eps10: float = 0.0
    gate_depol: float = 0.0
    n_gates: int = 3

    def __post_init__(self):
        for name in ("eps01", "eps10", "gate_depol"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.n_gates < 0:
            raise ValueError("n_gates must be nonnegative")

    @classmethod
    def device(cls, n_gates: int = 3) -> "NoiseParams":
        """Defaults derived from the VTT Q5 qubit-3 characterisation."""
        return cls(eps01=0.0295, eps10=0.0615, gate_depol=2 * (1 - 0.9976), n_gates=n_gates)

    @property
    def readout_fidelity(self) -> float:
        return 1.0 - (self.eps01 + self.eps10) / 2.0

    @property
    def contraction(self) -> float:
        """Factor multiplying the ideal <Z> after all gates."""
        return (1.0 - self.gate_depol) ** self.n_gates

    def expected_z(self, z):
        """Mean of the shot estimator for an ideal expectation value ``z``."""
        return (1.0 - self.eps01 - self.eps10) * self.contraction * z + (self.eps10 - self.eps01)

    @property
    def is_ideal(self) -> bool:
        return self.eps01 == 0.0 and self.eps10 == 0.0 and self.gate_depol == 0.0


IDEAL = NoiseParams()


def rx(angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(angle: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * angle), 0], [0, np.exp(0.5j * angle)]], dtype=complex)


def encode_features(obs: ReducedState) -> EncodingAngles:
    """Squash each observation component into (-pi/2, pi/2) with arctan."""
    return EncodingAngles(math.atan(obs[0]), math.atan(obs[1]), math.atan(obs[2]))


def encode_batch(obs: np.ndarray) -> np.ndarray:
    return np.arctan(np.asarray(obs, dtype=float))


def circuit_unitary(inp: CircuitInput) -> np.ndarray:
    b1, b2, b3 = inp.angles
    return rx(inp.theta) @ rz(b3) @ ry(b2) @ rz(b1) @ HADAMARD


def amplitudes(inp: CircuitInput) -> Amplitudes:
    a0, a1 = circuit_unitary(inp)[:, 0]
    return Amplitudes(complex(a0), complex(a1))


def expectation_z(inp: CircuitInput) -> float:
    """Exact <Z> of the circuit output, in closed form."""
    (b1, b2, b3), theta = inp
    cos_b1 = math.cos(b1)
    lateral = cos_b1 * math.cos(b2) * math.sin(b3) + math.sin(b1) * math.cos(b3)
    return lateral * math.sin(theta) - cos_b1 * math.sin(b2) * math.cos(theta)


def expectation_z_batch(betas: np.ndarray, theta) -> np.ndarray:
    """Vectorised closed form; ``betas`` has shape (..., 3), ``theta`` broadcasts."""
    betas = np.asarray(betas, dtype=float)
    b1, b2, b3 = betas[..., 0], betas[..., 1], betas[..., 2]
    cos_b1 = np.cos(b1)
    lateral = cos_b1 * np.cos(b2) * np.sin(b3) + np.sin(b1) * np.cos(b3)
    return lateral * np.sin(theta) - cos_b1 * np.sin(b2) * np.cos(theta)


def prob_zero(z, noise: NoiseParams = IDEAL):
    """Probability that a single shot reports 0, given the ideal <Z>."""
    p0 = 0.5 * (1.0 + noise.contraction * z)
    p0 = p0 * (1.0 - noise.eps01) + (1.0 - p0) * noise.eps10
    return np.clip(p0, 0.0, 1.0)


def sample_counts(
    inp: CircuitInput, n_shots: int, noise: NoiseParams, rng: np.random.Generator
) -> ShotCounts:
    if n_shots < 1:
        raise ValueError(f"n_shots must be >= 1, got {n_shots}")
    n0 = int(rng.binomial(n_shots, float(prob_zero(expectation_z(inp), noise))))
    return ShotCounts(n0, n_shots - n0)


def estimate_z(counts: ShotCounts) -> float:
    total = counts.n0 + counts.n1
    if total < 1:
        raise ValueError("need at least one shot")
    return 2.0 * counts.n0 / total - 1.0


@dataclass(frozen=True)
class Backend:
    """How circuit expectations are obtained: exactly, or from ``n_shots`` samples.

    Construct with :meth:`analytic`, :meth:`sampled` or :meth:`sampled_noisy`.
    """

    kind: str = "analytic"
    n_shots: int | None = None
    noise: NoiseParams = IDEAL

    def __post_init__(self):
        if self.kind not in ("analytic", "sampled", "sampled_noisy"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "analytic":
            if self.n_shots is not None:
                raise ValueError("analytic backend takes no shot count")
        elif self.n_shots is None or self.n_shots < 1:
            raise ValueError("sampled backends need n_shots >= 1")
        if self.kind != "sampled_noisy" and not self.noise.is_ideal:
            raise ValueError(f"{self.kind} backend must be noiseless")

    @classmethod
    def analytic(cls) -> "Backend":
        return cls("analytic")

    @classmethod
    def sampled(cls, n_shots: int) -> "Backend":
        return cls("sampled", int(n_shots))

    @classmethod
    def sampled_noisy(cls, n_shots: int, noise: NoiseParams | None = None) -> "Backend":
        return cls("sampled_noisy", int(n_shots), noise if noise is not None else NoiseParams.device())

    @property
    def is_analytic(self) -> bool:
        return self.kind == "analytic"

    def evaluate(self, angles: EncodingAngles, theta: float, rng: np.random.Generator | None) -> float:
        """One circuit execution: exact <Z> or its shot estimate."""
        z = expectation_z(CircuitInput(angles, theta))
        if self.kind == "analytic":
            return z
        n0 = rng.binomial(self.n_shots, float(prob_zero(z, self.noise)))
        return 2.0 * n0 / self.n_shots - 1.0

    def evaluate_batch(self, betas: np.ndarray, theta, rng: np.random.Generator | None) -> np.ndarray:
        """Independent executions, one per row of ``betas``."""
        z = expectation_z_batch(betas, theta)
        if self.kind == "analytic":
            return z
        n0 = rng.binomial(self.n_shots, prob_zero(z, self.noise))
        return 2.0 * n0 / self.n_shots - 1.0

    def describe(self) -> str:
        if self.kind == "analytic":
            return "analytic"
        return f"{self.kind}({self.n_shots})"


Evaluator = Union[Backend, None]


def parameter_shift_grad(
    inp: CircuitInput, evaluator: Evaluator = None, rng: np.random.Generator | None = None
) -> float:
    """d<Z>/dtheta from two evaluations at theta +- pi/2.

    ``evaluator=None`` means exact evaluation. With a sampled backend the two
    shifted circuits get independent shot draws.
    """
    backend = evaluator if evaluator is not None else Backend.analytic()
    plus = backend.evaluate(inp.angles, inp.theta + SHIFT, rng)
    minus = backend.evaluate(inp.angles, inp.theta - SHIFT, rng)
    return 0.5 * (plus - minus)


def parameter_shift_grad_batch(
    betas: np.ndarray, theta: float, backend: Backend, rng: np.random.Generator | None
) -> np.ndarray:
    plus = backend.evaluate_batch(betas, theta + SHIFT, rng)
    minus = backend.evaluate_batch(betas, theta - SHIFT, rng)
    return 0.5 * (plus - minus)
