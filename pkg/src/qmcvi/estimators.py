"""ELBO and ELBO-gradient estimators over a uniform batch.

Every estimator maps row i of the batch to one latent sample through the
inverse normal CDF and the family's transform, so MC and RQMC runs differ only
in where the uniforms come from. Gradients point uphill on the ELBO.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import families, transforms
from .families import FamilySpec
from .lds import SequenceSource, UniformBatch
from .models import Model


class EstimatorKind(str, enum.Enum):
    SCORE = "score"
    REPARAM = "reparam"


@dataclass(frozen=True)
class GradEstimate:
    grad: np.ndarray
    elbo_estimate: float
    n_samples: int
    estimator: EstimatorKind
    sequence: SequenceSource | None = None
    support_violations: int = 0

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.grad))) and self.support_violations == 0


def _check(model: Model, spec: FamilySpec, batch: UniformBatch):
    if spec.d_z != model.d_z:
        raise ValueError(f"family has {spec.d_z} latents, model has {model.d_z}")
    if batch.d != model.d_z:
        raise ValueError(f"batch dimension {batch.d} does not match d_z = {model.d_z}")


def _integrand(model, spec, lam, z):
    with np.errstate(invalid="ignore", over="ignore"):
        f = model.log_joint(z) - families.log_q(spec, lam, z)
    bad = ~np.isfinite(f)
    return f, int(bad.sum())


def sample(spec: FamilySpec, lam, batch: UniformBatch) -> np.ndarray:
    return transforms.apply(families.to_transform(spec, lam), batch)


def elbo_samples(model: Model, spec: FamilySpec, lam, batch: UniformBatch) -> np.ndarray:
    """Per-row values of log p(x, z_i) - log q(z_i | lam)."""
    _check(model, spec, batch)
    eps = transforms.inverse_normal_cdf(batch.points)
    z = families.reparam(spec, lam, eps)
    return _integrand(model, spec, lam, z)[0]


def elbo(model: Model, spec: FamilySpec, lam, batch: UniformBatch) -> float:
    return float(np.mean(elbo_samples(model, spec, lam, batch)))


def grad_score(model: Model, spec: FamilySpec, lam, batch: UniformBatch,
               sequence: SequenceSource | None = None) -> GradEstimate:
    """Score-function (REINFORCE) estimator."""
    _check(model, spec, batch)
    lam = np.asarray(lam, dtype=np.float64)
    z = sample(spec, lam, batch)
    f, bad = _integrand(model, spec, lam, z)
    with np.errstate(invalid="ignore"):
        g = np.mean(families.score(spec, lam, z) * f[:, None], axis=0)
    return GradEstimate(g * spec.trainable_mask(), float(np.mean(f)), batch.n,
                        EstimatorKind.SCORE, sequence, bad)


def grad_reparam(model: Model, spec: FamilySpec, lam, batch: UniformBatch,
                 sequence: SequenceSource | None = None, entropy: str = "analytic") -> GradEstimate:
    """Reparameterization estimator.

    ``entropy="analytic"`` adds the closed-form entropy gradient;
    ``entropy="sampled"`` differentiates -log q(g_lam(eps) | lam) per sample.
    """
    _check(model, spec, batch)
    lam = np.asarray(lam, dtype=np.float64)
    eps = transforms.inverse_normal_cdf(batch.points)
    z = families.reparam(spec, lam, eps)
    f, bad = _integrand(model, spec, lam, z)
    if bad:
        g = np.full(spec.n_params, np.nan)
    else:
        g = np.mean(families.reparam_vjp(spec, lam, eps, model.grad_z(z)), axis=0)
        if entropy == "analytic":
            g = g + families.entropy_grad(spec, lam)
        elif entropy == "sampled":
            path = families.reparam_vjp(spec, lam, eps, families.grad_z_log_q(spec, lam, z))
            g = g - np.mean(families.score(spec, lam, z) + path, axis=0)
        else:
            raise ValueError(f"unknown entropy mode {entropy!r}")
    return GradEstimate(g * spec.trainable_mask(), float(np.mean(f)), batch.n,
                        EstimatorKind.REPARAM, sequence, bad)


def estimate(kind, model: Model, spec: FamilySpec, lam, batch: UniformBatch,
             sequence: SequenceSource | None = None) -> GradEstimate:
    kind = EstimatorKind(kind)
    if kind is EstimatorKind.SCORE:
        return grad_score(model, spec, lam, batch, sequence)
    return grad_reparam(model, spec, lam, batch, sequence)
