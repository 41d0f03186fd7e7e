"""Unsupervised training of a binary sequence classifier against a label prior."""

from priormatch.errors import (
    DomainError,
    InvalidInputError,
    NoSteadyStateError,
    NumericalError,
    PriorMatchError,
)
from priormatch.model import ModelParams, posterior, posterior_jacobian, predict

__all__ = [
    "DomainError",
    "InvalidInputError",
    "ModelParams",
    "NoSteadyStateError",
    "NumericalError",
    "PriorMatchError",
    "posterior",
    "posterior_jacobian",
    "predict",
]

__version__ = "0.1.0"
