"""Pulse-level compilation of the encoding circuit and a shot-latency model.

The circuit compiles to three phased-RX (PRX) pulses, with every Z rotation
absorbed into pulse phases (virtual Z). Execution latency is modelled as a
fixed per-iteration overhead plus a per-shot cost; the per-shot cost has a
physical floor of reset wait + pulses + readout.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple

import numpy as np

from .quantum import PAULI_Z, CircuitInput, circuit_unitary

PULSE_DURATION_NS = 120.0


class ExecutionPath(str, enum.Enum):
    STANDARD_STACK = "standard_stack"
    LOW_LEVEL = "low_level"


class PrxPulse(NamedTuple):
    phase: float  # drive axis angle in the XY plane
    angle: float  # rotation angle
    duration_ns: float = PULSE_DURATION_NS


# Pulses are kept in execution order (first applied first).
PulseSequence = tuple[PrxPulse, PrxPulse, PrxPulse]


def prx_unitary(pulse: PrxPulse) -> np.ndarray:
    """exp(-i (X cos phase + Y sin phase) angle / 2)."""
    c = math.cos(pulse.angle / 2)
    s = math.sin(pulse.angle / 2)
    return np.array(
        [
            [c, -1j * s * np.exp(-1j * pulse.phase)],
            [-1j * s * np.exp(1j * pulse.phase), c],
        ],
        dtype=complex,
    )


def compile_to_prx(inp: CircuitInput) -> PulseSequence:
    """Three pulses reproducing the circuit up to a trailing Z rotation.

    The H gate becomes a pi/2 rotation about Y; Rz(b1) and Rz(b3) are pushed
    through as phase offsets of the later pulses.
    """
    (b1, b2, b3), theta = inp
    return (
        PrxPulse(phase=math.pi / 2, angle=math.pi / 2),
        PrxPulse(phase=math.pi / 2 - b1, angle=b2),
        PrxPulse(phase=-b1 - b3, angle=theta),
    )


def sequence_unitary(pulses: Iterable[PrxPulse]) -> np.ndarray:
    u = np.eye(2, dtype=complex)
    for pulse in pulses:
        u = prx_unitary(pulse) @ u
    return u


def _z_from_zero(u: np.ndarray) -> float:
    psi = u[:, 0]
    return float(np.real(np.conj(psi) @ PAULI_Z @ psi))


def verify_equivalence(inp: CircuitInput) -> float:
    """|<Z>| mismatch between the pulse sequence and the gate circuit, from |0>."""
    return abs(_z_from_zero(sequence_unitary(compile_to_prx(inp))) - _z_from_zero(circuit_unitary(inp)))


# -- latency ----------------------------------------------------------------

# Table of measured iteration rates (iter/s) on the device: shots -> (stack, low-level).
MEASURED_RATES = {
    128: (0.144, 6.23),
    256: (0.143, 5.62),
    512: (0.142, 4.28),
    1024: (0.144, 2.71),
}
PUBLISHED_SPEEDUPS = {128: 43.3, 256: 39.3, 512: 30.1, 1024: 18.8}


def measured_observations(path: ExecutionPath) -> list[tuple[int, float]]:
    col = 0 if ExecutionPath(path) is ExecutionPath.STANDARD_STACK else 1
    return [(shots, rates[col]) for shots, rates in MEASURED_RATES.items()]


def speedups(rates: dict[int, tuple[float, float]] = MEASURED_RATES) -> dict[int, float]:
    return {shots: low / stack for shots, (stack, low) in rates.items()}


@dataclass(frozen=True)
class TimingParams:
    """Latency constants. ``per_shot`` holds fitted per-shot costs by path;
    paths without a fitted value fall back to the physical floor."""

    reset_wait_us: float = 398.0
    readout_us: float = 1.0
    pulse_ns: float = PULSE_DURATION_NS
    n_pulses: int = 3
    fixed_overhead: dict = field(default_factory=dict)  # path -> seconds per iteration
    per_shot: dict = field(default_factory=dict)  # path -> seconds per shot

    def __post_init__(self):
        values = [self.reset_wait_us, self.readout_us, self.pulse_ns, self.n_pulses]
        values += list(self.fixed_overhead.values()) + list(self.per_shot.values())
        if any(v < 0 for v in values):
            raise ValueError("timing parameters must be nonnegative")

    @classmethod
    def optimized(cls, **kw) -> "TimingParams":
        return cls(reset_wait_us=220.0, **kw)

    @property
    def physical_per_shot(self) -> float:
        """Seconds per shot from reset wait, pulses and readout alone."""
        return (self.reset_wait_us + self.n_pulses * self.pulse_ns * 1e-3 + self.readout_us) * 1e-6

    def per_shot_time(self, path: ExecutionPath) -> float:
        return self.per_shot.get(ExecutionPath(path), self.physical_per_shot)

    def overhead(self, path: ExecutionPath) -> float:
        return self.fixed_overhead.get(ExecutionPath(path), 0.0)


class LatencyEstimate(NamedTuple):
    iteration_time: float
    iteration_rate: float
    max_control_freq: float


def iteration_time(n_shots: int, timing: TimingParams, path: ExecutionPath) -> LatencyEstimate:
    if n_shots < 1:
        raise ValueError(f"n_shots must be >= 1, got {n_shots}")
    t = timing.overhead(path) + n_shots * timing.per_shot_time(path)
    rate = 1.0 / t if t > 0 else math.inf
    return LatencyEstimate(t, rate, rate)


def fit_line(observations: Iterable[tuple[float, float]]) -> tuple[float, float]:
    """OLS of iteration time (1/rate) on shot count; returns (intercept, slope)."""
    obs = [(float(n), float(r)) for n, r in observations]
    if len({n for n, _ in obs}) < 2:
        raise ValueError("need at least two distinct shot counts to fit a line")
    if any(r <= 0 for _, r in obs):
        raise ValueError("rates must be positive")
    n = np.array([o[0] for o in obs])
    t = 1.0 / np.array([o[1] for o in obs])
    design = np.column_stack([np.ones_like(n), n])
    (a, b), *_ = np.linalg.lstsq(design, t, rcond=None)
    return float(a), float(b)


def fit_timing(
    observations: Iterable[tuple[float, float]],
    path: ExecutionPath = ExecutionPath.LOW_LEVEL,
    base: TimingParams | None = None,
) -> TimingParams:
    """Fit ``time = overhead + shots * per_shot`` for one path, merged into ``base``.

    Negative fitted values (possible for a flat standard-stack line) are kept
    out of the model by clamping to zero.
    """
    path = ExecutionPath(path)
    base = base if base is not None else TimingParams()
    a, b = fit_line(observations)
    return replace(
        base,
        fixed_overhead={**base.fixed_overhead, path: max(a, 0.0)},
        per_shot={**base.per_shot, path: max(b, 0.0)},
    )


def fit_measured(base: TimingParams | None = None) -> TimingParams:
    """Fit both execution paths to the built-in device measurements."""
    timing = base if base is not None else TimingParams.optimized()
    for path in ExecutionPath:
        timing = fit_timing(measured_observations(path), path, timing)
    return timing


def read_observations_csv(path) -> dict[ExecutionPath, list[tuple[int, float]]]:
    """Read ``shots,rate_hz`` rows; an optional ``path`` column selects the execution path
    (default low_level)."""
    out: dict[ExecutionPath, list[tuple[int, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"shots", "rate_hz"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected header with columns shots,rate_hz")
        for lineno, row in enumerate(reader, start=2):
            try:
                shots = int(row["shots"])
                rate = float(row["rate_hz"])
                p = ExecutionPath(row.get("path") or ExecutionPath.LOW_LEVEL.value)
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed row {row}") from exc
            out.setdefault(p, []).append((shots, rate))
    return out


def feasibility_report(matrices, timing: TimingParams, path: ExecutionPath, min_duration: float = 9.0) -> dict:
    """Join duration matrices with the latency model.

    A cell is an (inference frequency, shot count) pair. It is latency-feasible
    when the model's maximum control rate at that shot count reaches the
    inference frequency, and performance-feasible when the best training
    frequency's mean balancing duration is at least ``min_duration`` seconds.
    ``matrices`` is one duration matrix or an iterable of them.
    """
    if hasattr(matrices, "shot_count"):
        matrices = [matrices]
    path = ExecutionPath(path)
    cells = []
    for m in matrices:
        est = iteration_time(m.shot_count, timing, path)
        for f_inf in m.inference_freqs:
            best_train, best_mean = None, None
            for f_train in m.train_freqs:
                cell = m.cell(f_train, f_inf)
                if cell is not None and cell.n > 0 and (best_mean is None or cell.mean > best_mean):
                    best_train, best_mean = f_train, cell.mean
            latency_ok = est.max_control_freq >= f_inf
            perf_ok = best_mean is not None and best_mean >= min_duration
            cells.append(
                {
                    "inference_freq_hz": f_inf,
                    "shots": m.shot_count,
                    "max_control_freq_hz": est.max_control_freq,
                    "latency_feasible": bool(latency_ok),
                    "best_train_freq_hz": best_train,
                    "mean_duration_s": best_mean,
                    "performance_feasible": bool(perf_ok),
                    "feasible": bool(latency_ok and perf_ok),
                }
            )
    return {
        "path": path.value,
        "min_duration_s": min_duration,
        "cells": cells,
        "feasible_points": [[c["inference_freq_hz"], c["shots"]] for c in cells if c["feasible"]],
    }
