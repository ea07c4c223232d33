"""Maps from uniform batches to samples of target distributions via
per-coordinate inverse CDFs and Cholesky factors."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .lds import UniformBatch

CLAMP = 2.0 ** -33


class DecompositionError(ValueError):
    def __init__(self, index: int, pivot: float):
        super().__init__(f"matrix is not positive definite: pivot {index} is {pivot!r}")
        self.index = index


class ShapeError(ValueError):
    pass


# Wichura (1988), algorithm AS 241, PPND16.
_A = (3.3871328727963666080e0, 1.3314166789178437745e+2, 1.9715909503065514427e+3,
      1.3731693765509461125e+4, 4.5921953931549871457e+4, 6.7265770927008700853e+4,
      3.3430575583588128105e+4, 2.5090809287301226727e+3)
_B = (1.0, 4.2313330701600911252e+1, 6.8718700749205790830e+2, 5.3941960214247511077e+3,
      2.1213794301586595867e+4, 3.9307895800092710610e+4, 2.8729085735721942674e+4,
      5.2264952788528545610e+3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coef, x):
    out = np.full_like(x, coef[-1])
    for c in coef[-2::-1]:
        out = out * x + c
    return out


def inverse_normal_cdf(u):
    """Standard normal quantile. Inputs are clamped to [2^-33, 1 - 2^-33];
    values outside [0, 1] raise ValueError."""
    u = np.asarray(u, dtype=np.float64)
    if np.any(~((u >= 0.0) & (u <= 1.0))):
        raise ValueError("inverse_normal_cdf is defined on [0, 1] only")
    p = np.clip(u, CLAMP, 1.0 - CLAMP)
    q = p - 0.5
    out = np.empty_like(p)

    central = np.abs(q) <= 0.425
    if np.any(central):
        qc = q[central]
        r = 0.180625 - qc * qc
        out[central] = qc * _poly(_A, r) / _poly(_B, r)

    tail = ~central
    if np.any(tail):
        r = np.sqrt(-np.log(np.minimum(p[tail], 1.0 - p[tail])))
        near = r <= 5.0
        x = np.empty_like(r)
        rn = r[near] - 1.6
        x[near] = _poly(_C, rn) / _poly(_D, rn)
        rf = r[~near] - 5.0
        x[~near] = _poly(_E, rf) / _poly(_F, rf)
        out[tail] = np.where(q[tail] < 0.0, -x, x)
    return out if out.ndim else float(out)


def cholesky(sigma) -> np.ndarray:
    """Lower-triangular L with L @ L.T == sigma."""
    a = np.asarray(sigma, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")
    if np.max(np.abs(a - a.T), initial=0.0) > 1e-12:
        raise ValueError("matrix is not symmetric")
    n = a.shape[0]
    L = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - L[j, :j] @ L[j, :j]
        if not pivot > 0.0:
            raise DecompositionError(j, float(pivot))
        L[j, j] = np.sqrt(pivot)
        L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


@dataclass(frozen=True)
class StandardNormal:
    start: int
    stop: int


@dataclass(frozen=True)
class LogNormal:
    """exp(mu + sigma * Z); mu and sigma are scalars or per-coordinate arrays."""
    start: int
    stop: int
    mu: object = 0.0
    sigma: object = 1.0


@dataclass(frozen=True)
class MultivariateNormal:
    start: int
    stop: int
    mu: np.ndarray
    chol: np.ndarray

    def __post_init__(self):
        k = self.stop - self.start
        mu = np.broadcast_to(np.asarray(self.mu, dtype=np.float64), (k,))
        L = np.asarray(self.chol, dtype=np.float64)
        if L.shape != (k, k):
            raise ShapeError(f"Cholesky factor must be {k}x{k}, got {L.shape}")
        if np.any(np.triu(L, 1) != 0.0) or np.any(np.diag(L) <= 0.0):
            raise ValueError("Cholesky factor must be lower-triangular with positive diagonal")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "chol", L)

    @property
    def diagonal(self) -> bool:
        return not np.any(np.tril(self.chol, -1))


Block = Union[StandardNormal, LogNormal, MultivariateNormal]


@dataclass(frozen=True)
class TransformSpec:
    blocks: tuple

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        pos = 0
        for b in self.blocks:
            if b.start != pos or b.stop <= b.start:
                raise ValueError("block spans must partition [0, d) in order")
            pos = b.stop

    @property
    def d(self) -> int:
        return self.blocks[-1].stop if self.blocks else 0


def apply(spec: TransformSpec, batch: UniformBatch) -> np.ndarray:
    """Transform a uniform batch into an (n, d) sample matrix."""
    if batch.d != spec.d:
        raise ShapeError(f"batch has {batch.d} coordinates, transform needs {spec.d}")
    eps = inverse_normal_cdf(batch.points)
    out = np.empty_like(eps)
    for b in spec.blocks:
        e = eps[:, b.start:b.stop]
        if isinstance(b, StandardNormal):
            out[:, b.start:b.stop] = e
        elif isinstance(b, LogNormal):
            out[:, b.start:b.stop] = np.exp(np.asarray(b.mu) + np.asarray(b.sigma) * e)
        elif b.diagonal:
            out[:, b.start:b.stop] = b.mu + e * np.diag(b.chol)
        else:
            out[:, b.start:b.stop] = b.mu + e @ b.chol.T
    return out
