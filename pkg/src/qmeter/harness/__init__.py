"""Experiment configs, the runner, the ontology classifier and reports."""

from .classify import (
    MixtureFit,
    OntologyVerdict,
    VerdictKind,
    classify_mean_distribution,
    fit_gaussian_mixture,
)
from .config import ConfigError, ExperimentConfig
from .report import formula_table, parse_ranges, resource_report
from .runner import RunSummary, run_experiment

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "MixtureFit",
    "OntologyVerdict",
    "RunSummary",
    "VerdictKind",
    "classify_mean_distribution",
    "fit_gaussian_mixture",
    "formula_table",
    "parse_ranges",
    "resource_report",
    "run_experiment",
]
