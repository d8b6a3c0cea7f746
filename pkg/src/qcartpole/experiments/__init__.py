from .config import BaselineConfig, ExperimentConfig, SweepConfig, load_config
from .results import BaselineReport, DurationCell, DurationMatrix, export_results
from .runner import cmd_baseline, cmd_eval_matrix, cmd_latency, cmd_train_sweep

__all__ = [
    "BaselineConfig",
    "BaselineReport",
    "DurationCell",
    "DurationMatrix",
    "ExperimentConfig",
    "SweepConfig",
    "cmd_baseline",
    "cmd_eval_matrix",
    "cmd_latency",
    "cmd_train_sweep",
    "export_results",
    "load_config",
]
