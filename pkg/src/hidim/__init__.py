"""Estimators, concentration bounds and minimax constructions for high-dimensional
statistics, with a seeded Monte Carlo harness that checks rates and tail bounds."""

from .datagen import NoiseKind, RandomSource, RegressionInstance
from .errors import ConstructionFailed, InvalidInput, IOFailure
from .linalg import SvdFactorization

__version__ = "0.1.0"

__all__ = [
    "ConstructionFailed",
    "InvalidInput",
    "IOFailure",
    "NoiseKind",
    "RandomSource",
    "RegressionInstance",
    "SvdFactorization",
    "__version__",
]
