"""Benchmark orchestration: configuration, job pipeline, reports and CLI."""
from .config import BASELINES, METHODS, ExperimentConfig, load_config_file, make_config
from .pipeline import aggregate, cmd_benchmark, cmd_generate, evaluate_job, run_job, train_job
from .report import cmd_report

__all__ = [
    "BASELINES",
    "METHODS",
    "ExperimentConfig",
    "load_config_file",
    "make_config",
    "aggregate",
    "cmd_benchmark",
    "cmd_generate",
    "evaluate_job",
    "run_job",
    "train_job",
    "cmd_report",
]
