"""Duration matrices, baseline reports and their CSV/JSON serialisation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

MATRIX_CSV_HEADER = ["train_freq_hz", "inf_freq_hz", "shots", "mean_s", "std_s", "n"]


class DurationCell(NamedTuple):
    mean: float
    std: float
    n: int

    @property
    def sem(self) -> float:
        return self.std / math.sqrt(self.n) if self.n > 0 else math.inf

    @classmethod
    def from_samples(cls, durations) -> "DurationCell":
        d = np.asarray(durations, dtype=float)
        if d.size == 0:
            return cls(math.nan, math.nan, 0)
        std = float(d.std(ddof=1)) if d.size > 1 else 0.0
        return cls(float(d.mean()), std, int(d.size))


@dataclass
class DurationMatrix:
    """Mean balancing duration per (training frequency, inference frequency) at one shot count.

    Cells with no checkpoints are absent (``None``), never zero.
    """

    shot_count: int
    train_freqs: list[float]
    inference_freqs: list[float]
    cells: dict = field(default_factory=dict)  # (train, inf) -> DurationCell

    def cell(self, train_freq, inf_freq) -> DurationCell | None:
        return self.cells.get((float(train_freq), float(inf_freq)))

    def set(self, train_freq, inf_freq, cell: DurationCell | None) -> None:
        self.cells[(float(train_freq), float(inf_freq))] = cell

    def means(self) -> np.ndarray:
        """(train x inference) array of means, NaN where absent."""
        out = np.full((len(self.train_freqs), len(self.inference_freqs)), np.nan)
        for i, ft in enumerate(self.train_freqs):
            for j, fi in enumerate(self.inference_freqs):
                c = self.cell(ft, fi)
                if c is not None and c.n > 0:
                    out[i, j] = c.mean
        return out

    @property
    def is_empty(self) -> bool:
        return not self.train_freqs or not self.inference_freqs

    def rows(self) -> list[list]:
        rows = []
        for ft in self.train_freqs:
            for fi in self.inference_freqs:
                c = self.cell(ft, fi)
                if c is None:
                    rows.append([ft, fi, self.shot_count, "", "", 0])
                else:
                    rows.append([ft, fi, self.shot_count, c.mean, c.std, c.n])
        return rows

    def to_dict(self) -> dict:
        return {
            "shot_count": self.shot_count,
            "train_freqs": list(self.train_freqs),
            "inference_freqs": list(self.inference_freqs),
            "cells": [
                {
                    "train_freq_hz": ft,
                    "inf_freq_hz": fi,
                    **({"mean_s": c.mean, "std_s": c.std, "n": c.n} if c is not None else {"absent": True}),
                }
                for ft in self.train_freqs
                for fi in self.inference_freqs
                for c in [self.cell(ft, fi)]
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DurationMatrix":
        m = cls(int(doc["shot_count"]), [float(f) for f in doc["train_freqs"]], [float(f) for f in doc["inference_freqs"]])
        for c in doc["cells"]:
            cell = None if c.get("absent") else DurationCell(c["mean_s"], c["std_s"], int(c["n"]))
            m.set(c["train_freq_hz"], c["inf_freq_hz"], cell)
        return m

    def format(self) -> str:
        lines = [f"shots={self.shot_count}  mean duration [s] (rows: train Hz, cols: inference Hz)"]
        lines.append("train\\inf " + "".join(f"{fi:>14g}" for fi in self.inference_freqs))
        for ft in self.train_freqs:
            row = f"{ft:>9g} "
            for fi in self.inference_freqs:
                c = self.cell(ft, fi)
                row += f"{'absent':>14}" if c is None else f"{c.mean:>7.2f}±{c.std:<6.2f}"
            lines.append(row)
        return "\n".join(lines)


@dataclass
class BaselineReport:
    """Episodes-to-solve per agent variant; ``None`` marks an unsolved run."""

    episode_cap: int
    runs: dict = field(default_factory=dict)  # variant -> list[int | None]

    def solved(self, variant: str) -> list[int]:
        return [e for e in self.runs.get(variant, []) if e is not None]

    def unsolved(self, variant: str) -> int:
        return sum(e is None for e in self.runs.get(variant, []))

    def mean(self, variant: str) -> float:
        s = self.solved(variant)
        return float(np.mean(s)) if s else math.nan

    def std(self, variant: str) -> float:
        s = self.solved(variant)
        return float(np.std(s, ddof=1)) if len(s) > 1 else (0.0 if s else math.nan)

    def to_dict(self) -> dict:
        return {
            "episode_cap": self.episode_cap,
            "variants": {
                v: {
                    "episodes_to_solve": runs,
                    "mean": _json_float(self.mean(v)),
                    "std": _json_float(self.std(v)),
                    "solved": len(self.solved(v)),
                    "unsolved": self.unsolved(v),
                }
                for v, runs in self.runs.items()
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BaselineReport":
        return cls(int(doc["episode_cap"]), {v: list(d["episodes_to_solve"]) for v, d in doc["variants"].items()})

    def format(self) -> str:
        lines = [f"{'variant':<18}{'solved':>8}{'mean':>10}{'std':>10}   (cap {self.episode_cap})"]
        for v in self.runs:
            n = len(self.runs[v])
            lines.append(f"{v:<18}{len(self.solved(v)):>4}/{n:<3}{self.mean(v):>10.1f}{self.std(v):>10.1f}")
        return "\n".join(lines)


def _json_float(x: float):
    return None if math.isnan(x) else x


def matrices_to_csv(matrices) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MATRIX_CSV_HEADER)
    for m in matrices:
        writer.writerows(m.rows())
    return buf.getvalue()


def matrices_from_csv(text: str) -> list[DurationMatrix]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != MATRIX_CSV_HEADER:
        raise ValueError(f"unexpected matrix CSV header {reader.fieldnames}")
    by_shots: dict[int, DurationMatrix] = {}
    for row in reader:
        shots = int(row["shots"])
        m = by_shots.setdefault(shots, DurationMatrix(shots, [], []))
        ft, fi = float(row["train_freq_hz"]), float(row["inf_freq_hz"])
        if ft not in m.train_freqs:
            m.train_freqs.append(ft)
        if fi not in m.inference_freqs:
            m.inference_freqs.append(fi)
        cell = None if row["mean_s"] == "" else DurationCell(float(row["mean_s"]), float(row["std_s"]), int(row["n"]))
        m.set(ft, fi, cell)
    return list(by_shots.values())


def export_results(obj, path, fmt: str | None = None) -> Path:
    """Write a report or list of duration matrices as CSV or JSON.

    ``fmt`` defaults to the file suffix. CSV is only defined for duration matrices.
    """
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".") or "json").lower()
    if isinstance(obj, DurationMatrix):
        obj = [obj]
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        if not isinstance(obj, list):
            raise ValueError("CSV export is only defined for duration matrices")
        path.write_text(matrices_to_csv(obj))
    elif fmt == "json":
        if isinstance(obj, list):
            doc = {"matrices": [m.to_dict() for m in obj]}
        elif hasattr(obj, "to_dict"):
            doc = obj.to_dict()
        else:
            doc = obj
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        raise ValueError(f"unknown export format {fmt!r}")
    return path


def load_matrices(path) -> list[DurationMatrix]:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".csv":
        return matrices_from_csv(text)
    doc = json.loads(text)
    return [DurationMatrix.from_dict(d) for d in doc["matrices"]]
