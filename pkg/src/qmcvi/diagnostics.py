"""Measurement harness: gradient variance by resampling, log-log rate fits,
high-precision ELBO evaluation and the integration-rate study."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import estimators, lds
from .families import FamilySpec
from .models import Model
from .optim import step_seed

# streams kept apart from the optimizer's (stream 0)
DIAG_STREAM = 0xD1A6
EVAL_STREAM = 0xE7A1
EVAL_SEED = 20180710
DEFAULT_RESAMPLES = 1000
DEFAULT_ELBO_SAMPLES = 10_000


@dataclass(frozen=True)
class VarianceReport:
    lam: np.ndarray
    n: int
    resamples: int
    trace_of_variance: float
    per_coordinate_variance: np.ndarray
    mean_grad: np.ndarray
    non_finite: int = 0


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float


@dataclass(frozen=True)
class ElboEstimate:
    value: float
    stderr: float
    n: int


def grad_variance(model: Model, spec: FamilySpec, lam, estimator, source_kind, n: int,
                  resamples: int = DEFAULT_RESAMPLES, seed: int = 0,
                  sampler: Optional[Callable[[int, int, int], lds.UniformBatch]] = None) -> VarianceReport:
    """Empirical variance of the gradient estimator over independent batches.

    ``sampler(seed, n, d)`` replaces the sequence generator when given.
    """
    if resamples < 2:
        raise ValueError("need at least two resamples")
    kind = lds.SequenceKind(source_kind)
    grads = []
    bad = 0
    for r in range(resamples):
        s = step_seed(seed, r, DIAG_STREAM)
        if sampler is not None:
            batch = sampler(s, n, model.d_z)
        else:
            batch = lds.generate(lds.SequenceSource(kind, model.d_z, s), n)
        est = estimators.estimate(estimator, model, spec, lam, batch)
        if est.finite:
            grads.append(est.grad)
        else:
            bad += 1
    if bad > 0.01 * resamples:
        raise RuntimeError(f"{bad} of {resamples} gradient resamples were non-finite")
    g = np.array(grads)
    var = g.var(axis=0, ddof=1)
    return VarianceReport(np.asarray(lam, dtype=np.float64).copy(), n, resamples,
                          float(var.sum()), var, g.mean(axis=0), bad)


def rate_fit(points) -> RateFit:
    """Least-squares fit of log(value) against log(N)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 4:
        raise ValueError("rate_fit needs at least 4 (N, value) pairs")
    if np.any(pts <= 0):
        raise ValueError("rate_fit needs positive N and values")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), float(r2))


def elbo_highprec(model: Model, spec: FamilySpec, lam, n: int = DEFAULT_ELBO_SAMPLES,
                  seed: int = EVAL_SEED) -> ElboEstimate:
    """Plain Monte Carlo ELBO with its standard error, fixed evaluation seed."""
    src = lds.SequenceSource(lds.SequenceKind.MC, model.d_z, step_seed(seed, 0, EVAL_STREAM))
    vals = estimators.elbo_samples(model, spec, lam, lds.generate(src, n))
    return ElboEstimate(float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n)), n)


def smooth_integrand(u) -> np.ndarray:
    """prod_j (1 + 0.3 (u_j - 0.5)); integrates to exactly 1 over the unit cube."""
    return np.prod(1.0 + 0.3 * (np.asarray(u) - 0.5), axis=-1)


def integration_study(kind, d: int, ns, randomizations: int = 100, seed: int = 0,
                      integrand=smooth_integrand, exact: float = 1.0):
    """For each N: (N, variance of the estimate, RMSE against ``exact``).

    Deterministic QMC is evaluated once; its variance is 0 and RMSE is the
    absolute error.
    """
    kind = lds.SequenceKind(kind)
    rows = []
    for n in ns:
        reps = 1 if kind is lds.SequenceKind.QMC else randomizations
        est = np.array([
            integrand(lds.generate(lds.SequenceSource(kind, d, step_seed(seed, r, n)), n).points).mean()
            for r in range(reps)])
        var = float(est.var(ddof=1)) if reps > 1 else 0.0
        rows.append((n, var, float(np.sqrt(np.mean((est - exact) ** 2)))))
    return rows


def gradient_rate_study(model: Model, spec: FamilySpec, lam, estimator, kind, ns,
                        resamples: int = 200, seed: int = 0):
    """(N, tr Var) pairs for the given estimator and sequence kind."""
    return [(n, grad_variance(model, spec, lam, estimator, kind, n, resamples, seed).trace_of_variance)
            for n in ns]
