"""Quasi-Monte Carlo variational inference: randomized Sobol' point sets drive
score-function and reparameterization gradient estimators for mean-field
variational families."""

__version__ = "0.1.0"

from .lds import SequenceKind, SequenceSource, UniformBatch, generate, randomize, sobol
from .families import FamilySpec
from .estimators import EstimatorKind, GradEstimate, elbo, grad_reparam, grad_score
from .optim import OptimConfig, SampleSchedule, run

__all__ = ["SequenceKind", "SequenceSource", "UniformBatch", "generate", "randomize", "sobol",
           "FamilySpec", "EstimatorKind", "GradEstimate", "elbo", "grad_reparam", "grad_score",
           "OptimConfig", "SampleSchedule", "run"]
