"""Scenarios, Monte-Carlo engine, deployment ingestion, experiments and CLI."""

from .deploy import Deployment, ingest_deployment
from .engine import estimate, run_blocks, summarize
from .experiments import (run_handover_experiment, run_model_comparison, run_sojourn_experiment,
                          run_sweep)
from .scenario import (DeploymentSpec, HexSpec, PppSpec, RunReport, Scenario, parse_pause,
                       parse_velocity)

__all__ = [
    "Deployment", "ingest_deployment", "estimate", "run_blocks", "summarize",
    "run_handover_experiment", "run_model_comparison", "run_sojourn_experiment", "run_sweep",
    "DeploymentSpec", "HexSpec", "PppSpec", "RunReport", "Scenario", "parse_pause",
    "parse_velocity",
]
