"""Experiment configuration: JSON file plus ``--set section.key=value`` overrides.

Schema (every key optional)::

    {
      "baseline": {"variants": [...], "seeds": 10, "base_seed": 0, "episodes": 1500,
                   "control_freq": 50, "gamma": 0.99, "classical_lr": [0.002, 0.002],
                   "hybrid_lr": [0.05, 0.05], "hybrid_shots": 1024},
      "sweep":    {"train_freqs": [20, 25, 33, 50, 100], "train_shots": 4096, "seeds": 3,
                   "base_seed": 0, "episodes": 500, "lr": [0.05, 0.05], "gamma": 0.99,
                   "inference_freqs": [20, 25, 33, 50, 100],
                   "inference_shots": [128, 256, 512, 1024], "eval_episodes": 10,
                   "noise": {"eps01": 0.0295, "eps10": 0.0615, "gate_depol": 0.0048, "n_gates": 3}}
    }
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..quantum import NoiseParams

VARIANTS = ("classical", "hybrid_analytic", "hybrid_shot")


@dataclass(frozen=True)
class BaselineConfig:
    variants: tuple = VARIANTS
    seeds: int = 10
    base_seed: int = 0
    episodes: int = 1500
    control_freq: float = 50.0
    gamma: float = 0.99
    classical_lr: tuple = (0.002, 0.002)
    hybrid_lr: tuple = (0.05, 0.05)
    hybrid_shots: int = 1024

    def __post_init__(self):
        unknown = set(self.variants) - set(VARIANTS)
        if unknown:
            raise ValueError(f"unknown baseline variants {sorted(unknown)}")
        if self.seeds < 1 or self.episodes < 1:
            raise ValueError("seeds and episodes must be >= 1")


@dataclass(frozen=True)
class SweepConfig:
    train_freqs: tuple = (20.0, 25.0, 33.0, 50.0, 100.0)
    train_shots: int = 4096
    seeds: int = 3
    base_seed: int = 0
    episodes: int = 500
    lr: tuple = (0.05, 0.05)
    gamma: float = 0.99
    inference_freqs: tuple = (20.0, 25.0, 33.0, 50.0, 100.0)
    inference_shots: tuple = (128, 256, 512, 1024)
    eval_episodes: int = 10
    noise: NoiseParams = field(default_factory=NoiseParams.device)

    def __post_init__(self):
        for name in ("train_freqs", "inference_freqs", "inference_shots"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be nonempty")
        if self.seeds < 1 or self.episodes < 1 or self.eval_episodes < 0:
            raise ValueError("invalid seeds / episodes / eval_episodes")

    def seed_list(self) -> list[int]:
        return [self.base_seed + i for i in range(self.seeds)]


@dataclass(frozen=True)
class ExperimentConfig:
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)

    def to_dict(self) -> dict:
        return asdict(self)


_TUPLE_FIELDS = {"variants", "classical_lr", "hybrid_lr", "lr", "train_freqs", "inference_freqs", "inference_shots"}
_FREQ_FIELDS = {"train_freqs", "inference_freqs"}


def _coerce(name: str, value):
    if name == "noise" and isinstance(value, dict):
        return NoiseParams(**value)
    if name in _TUPLE_FIELDS:
        value = tuple(value) if isinstance(value, (list, tuple)) else (value,)
        if name in _FREQ_FIELDS:
            value = tuple(float(v) for v in value)
    return value


def _section(cls, data: dict):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**{k: _coerce(k, v) for k, v in data.items()})


def from_dict(doc: dict) -> ExperimentConfig:
    unknown = set(doc) - {"baseline", "sweep"}
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    return ExperimentConfig(
        _section(BaselineConfig, doc.get("baseline", {})),
        _section(SweepConfig, doc.get("sweep", {})),
    )


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    return from_dict(json.loads(Path(path).read_text()))


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(config: ExperimentConfig, assignments: list[str]) -> ExperimentConfig:
    """Apply ``section.key=value`` strings; values are parsed as JSON when possible."""
    for item in assignments:
        key, sep, raw = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot or section not in ("baseline", "sweep"):
            raise ValueError(f"override must look like baseline.key=value or sweep.key=value: {item!r}")
        current = getattr(config, section)
        if name.startswith("noise."):
            sub = name.split(".", 1)[1]
            value = replace(current.noise, **{sub: _parse_value(raw)})
            name = "noise"
        elif name not in {f.name for f in fields(current)}:
            raise ValueError(f"unknown {section} key {name!r}")
        else:
            value = _coerce(name, _parse_value(raw))
        config = replace(config, **{section: replace(current, **{name: value})})
    return config
