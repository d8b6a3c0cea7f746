"""Experiment commands: baseline ensemble, frequency sweep, evaluation matrices, latency."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .. import hardware
from ..dynamics import EnvConfig
from ..hardware import ExecutionPath
from ..quantum import Backend
from ..training import (
    TrainConfig,
    build_agent,
    load_checkpoint,
    run_episode,
    save_checkpoint,
    stream,
    train_agent,
)
from .config import BaselineConfig, SweepConfig
from .results import BaselineReport, DurationCell, DurationMatrix

log = logging.getLogger(__name__)


def _map(fn, items: list, workers: int = 1) -> list:
    """Order-preserving map, in-process or over a process pool."""
    if workers <= 1 or len(items) <= 1:
        return [fn(*item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *item) for item in items]
        return [f.result() for f in futures]


# -- baseline -----------------------------------------------------------------


def baseline_train_config(variant: str, seed: int, cfg: BaselineConfig) -> TrainConfig:
    if variant == "classical":
        agent, backend, lrs = "classical", Backend.analytic(), cfg.classical_lr
    elif variant == "hybrid_analytic":
        agent, backend, lrs = "hybrid", Backend.analytic(), cfg.hybrid_lr
    elif variant == "hybrid_shot":
        agent, backend, lrs = "hybrid", Backend.sampled(cfg.hybrid_shots), cfg.hybrid_lr
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return TrainConfig(
        agent=agent,
        gamma=cfg.gamma,
        lr_actor=lrs[0],
        lr_critic=lrs[1],
        episodes=cfg.episodes,
        control_freq=cfg.control_freq,
        backend=backend,
        seed=seed,
        stop_on_success=True,
    )


def _baseline_unit(variant: str, seed: int, cfg: BaselineConfig, out_dir):
    tc = baseline_train_config(variant, seed, cfg)
    summary, ckpt = train_agent(build_agent(tc.agent, seed), tc)
    if out_dir is not None:
        save_checkpoint(Path(out_dir) / "checkpoints" / "baseline" / variant / f"seed_{seed:03d}.json", ckpt)
    log.info("baseline %s seed %d -> %s (%.1fs)", variant, seed, summary.episodes_to_solve, summary.wall_time)
    return summary.episodes_to_solve


def cmd_baseline(cfg: BaselineConfig, out_dir=None, workers: int = 1) -> BaselineReport:
    seeds = [cfg.base_seed + i for i in range(cfg.seeds)]
    units = [(v, s, cfg, out_dir) for v in cfg.variants for s in seeds]
    results = _map(_baseline_unit, units, workers)
    report = BaselineReport(cfg.episodes, {v: [] for v in cfg.variants})
    for (variant, _, _, _), solved_at in zip(units, results):
        report.runs[variant].append(solved_at)
    return report


# -- training sweep ---------------------------------------------------------


def sweep_checkpoint_path(out_dir, train_freq: float, seed: int) -> Path:
    return Path(out_dir) / "checkpoints" / "sweep" / f"train_{train_freq:g}hz" / f"seed_{seed:03d}.json"


def sweep_train_config(train_freq: float, seed: int, cfg: SweepConfig) -> TrainConfig:
    return TrainConfig(
        agent="hybrid",
        gamma=cfg.gamma,
        lr_actor=cfg.lr[0],
        lr_critic=cfg.lr[1],
        episodes=cfg.episodes,
        control_freq=train_freq,
        backend=Backend.sampled(cfg.train_shots),
        seed=seed,
        stop_on_success=False,
    )


def _sweep_unit(train_freq: float, seed: int, cfg: SweepConfig, out_dir):
    try:
        tc = sweep_train_config(train_freq, seed, cfg)
        summary, ckpt = train_agent(build_agent("hybrid", seed), tc)
        path = sweep_checkpoint_path(out_dir, train_freq, seed)
        save_checkpoint(path, ckpt)
        log.info(
            "sweep %g Hz seed %d: last-10 mean duration %.2fs (%.1fs)",
            train_freq, seed, float(np.mean(summary.durations[-10:])), summary.wall_time,
        )
        return str(path), None
    except Exception as exc:  # one failed run must not abort the sweep
        log.error("sweep %g Hz seed %d failed: %s", train_freq, seed, exc)
        return None, f"{type(exc).__name__}: {exc}"


def cmd_train_sweep(cfg: SweepConfig, out_dir, workers: int = 1) -> dict:
    """Train every (train_freq, seed); returns {(train_freq, seed): checkpoint path}.

    Failed runs are logged and left out of the mapping.
    """
    units = [(float(f), s, cfg, out_dir) for f in cfg.train_freqs for s in cfg.seed_list()]
    out = {}
    for (f, s, _, _), (path, err) in zip(units, _map(_sweep_unit, units, workers)):
        if path is not None:
            out[(f, s)] = Path(path)
    return out


def discover_checkpoints(out_dir) -> dict:
    """Find sweep checkpoints under ``out_dir`` keyed by (train_freq, seed)."""
    found = {}
    for path in sorted((Path(out_dir) / "checkpoints" / "sweep").glob("train_*hz/seed_*.json")):
        try:
            meta = load_checkpoint(path).meta
        except Exception as exc:
            log.warning("skipping unreadable checkpoint %s: %s", path, exc)
            continue
        found[(float(meta["control_freq_hz"]), int(meta["seed"]))] = path
    return found


# -- evaluation matrices ------------------------------------------------------


def evaluate_durations(agent, inf_freq: float, shots: int, noise, episodes: int, seed: int, label: str) -> list[float]:
    """Balancing durations (s) of inference-only episodes on the noisy sampled backend."""
    env = EnvConfig(control_freq=inf_freq)
    backend = Backend.sampled_noisy(shots, noise)
    policy_rng = stream(seed, f"eval.policy/{label}")
    env_rng = stream(seed, f"eval.env/{label}")
    shot_rng = stream(seed, f"eval.shots/{label}")
    return [
        run_episode(agent, env, backend, policy_rng, env_rng, shot_rng).duration(inf_freq)
        for _ in range(episodes)
    ]


def _eval_unit(path, train_freq: float, seed: int, cfg: SweepConfig):
    agent = load_checkpoint(path).agent
    out = {}
    for shots in cfg.inference_shots:
        for fi in cfg.inference_freqs:
            label = f"{train_freq:g}/{fi:g}/{shots}"
            out[(int(shots), float(fi))] = evaluate_durations(
                agent, fi, int(shots), cfg.noise, cfg.eval_episodes, seed, label
            )
    return out


def cmd_eval_matrix(checkpoints, cfg: SweepConfig, workers: int = 1) -> list[DurationMatrix]:
    """One duration matrix per inference shot count, pooling seeds x episodes per cell.

    ``checkpoints`` maps (train_freq, seed) to a path, or is a sweep output directory.
    Training frequencies without checkpoints give absent cells.
    """
    if not isinstance(checkpoints, dict):
        checkpoints = discover_checkpoints(checkpoints)
    if cfg.eval_episodes == 0:
        log.warning("eval_episodes = 0: nothing to evaluate, emitting no matrices")
        return []
    train_freqs = [float(f) for f in cfg.train_freqs]
    units = [(p, f, s, cfg) for (f, s), p in sorted(checkpoints.items()) if f in train_freqs]
    results = _map(_eval_unit, units, workers)

    pooled: dict = {}
    for (_, ft, _, _), res in zip(units, results):
        for (shots, fi), durations in res.items():
            pooled.setdefault((shots, ft, fi), []).extend(durations)

    matrices = []
    for shots in cfg.inference_shots:
        m = DurationMatrix(int(shots), train_freqs, [float(f) for f in cfg.inference_freqs])
        for ft in m.train_freqs:
            for fi in m.inference_freqs:
                samples = pooled.get((int(shots), ft, fi))
                m.set(ft, fi, DurationCell.from_samples(samples) if samples else None)
        matrices.append(m)
    return matrices


# -- latency ------------------------------------------------------------------


def cmd_latency(observations: dict | None = None, matrices=None, base: hardware.TimingParams | None = None) -> dict:
    """Fit the latency model on both execution paths and join with duration matrices.

    ``observations`` maps ExecutionPath -> [(shots, rate_hz)]; paths not given
    use the built-in device measurements.
    """
    timing = base if base is not None else hardware.TimingParams.optimized()
    observations = dict(observations or {})
    rows = {}
    for path in ExecutionPath:
        obs = observations.get(path) or hardware.measured_observations(path)
        timing = hardware.fit_timing(obs, path, timing)
        rows[path] = obs
    table = []
    for path in ExecutionPath:
        for shots, rate in rows[path]:
            pred = hardware.iteration_time(shots, timing, path).iteration_rate
            table.append(
                {
                    "path": path.value,
                    "shots": shots,
                    "observed_rate_hz": rate,
                    "predicted_rate_hz": pred,
                    "rel_error": abs(pred - rate) / rate,
                }
            )
    paired = {}
    std_rates = dict(rows[ExecutionPath.STANDARD_STACK])
    for shots, rate in rows[ExecutionPath.LOW_LEVEL]:
        if shots in std_rates:
            paired[shots] = (std_rates[shots], rate)
    report = {
        "timing": {
            "reset_wait_us": timing.reset_wait_us,
            "readout_us": timing.readout_us,
            "pulse_ns": timing.pulse_ns,
            "physical_per_shot_s": timing.physical_per_shot,
            "fixed_overhead_s": {p.value: timing.overhead(p) for p in ExecutionPath},
            "per_shot_s": {p.value: timing.per_shot_time(p) for p in ExecutionPath},
        },
        "rates": table,
        "speedups": {str(k): v for k, v in hardware.speedups(paired).items()},
    }
    if matrices:
        report["feasibility"] = hardware.feasibility_report(matrices, timing, ExecutionPath.LOW_LEVEL)
    report["_timing"] = timing
    return report


def format_latency(report: dict) -> str:
    t = report["timing"]
    lines = [
        f"physical per-shot floor: {t['physical_per_shot_s'] * 1e6:.1f} us",
    ]
    for p in ExecutionPath:
        lines.append(
            f"{p.value:<15} overhead {t['fixed_overhead_s'][p.value]:.4f} s, per shot {t['per_shot_s'][p.value] * 1e6:.1f} us"
        )
    lines.append(f"{'path':<15}{'shots':>6}{'observed':>10}{'predicted':>11}{'err':>7}")
    for r in report["rates"]:
        lines.append(
            f"{r['path']:<15}{r['shots']:>6}{r['observed_rate_hz']:>10.3f}{r['predicted_rate_hz']:>11.3f}{100 * r['rel_error']:>6.1f}%"
        )
    lines.append("speedup (low-level / stack): " + ", ".join(f"{k}: {v:.1f}x" for k, v in report["speedups"].items()))
    feas = report.get("feasibility")
    if feas is not None:
        pts = feas["feasible_points"]
        lines.append(f"jointly feasible (inference Hz, shots): {pts if pts else 'none'}")
    return "\n".join(lines)


