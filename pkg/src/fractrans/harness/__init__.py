"""Experiment harness: configs, runs, sweeps, reports and the acceptance suite."""
from .config import EXPERIMENTS, ExperimentConfig, default_config
from .records import RunRecord, Verdict, load_records, report
from .runner import run, sweep
from .experiments import REGISTRY

__all__ = ["EXPERIMENTS", "ExperimentConfig", "default_config", "RunRecord", "Verdict",
           "load_records", "report", "run", "sweep", "REGISTRY"]
