"""Simulation of projective, weak and protective measurements and of cloning.

Each scheme is studied through the distribution of the average of repeated
outcomes on a single copy, which the :mod:`qmeter.harness` classifier
compares against exact, FAPP ("for all practical purposes") and
no-ontology forms.
"""

from ._kernels import BACKEND, available_backends
from .core import (
    DensityMatrix,
    DimensionMismatchError,
    GaussianMixture1D,
    HermitianOperator,
    Observable,
    PointMasses,
    PureState,
    RandomStream,
    RenormalizationError,
    expectation,
    matrix_exponential_evolve,
    observable_variance,
    partial_trace,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DensityMatrix",
    "DimensionMismatchError",
    "GaussianMixture1D",
    "HermitianOperator",
    "Observable",
    "PointMasses",
    "PureState",
    "RandomStream",
    "RenormalizationError",
    "available_backends",
    "expectation",
    "matrix_exponential_evolve",
    "observable_variance",
    "partial_trace",
]
