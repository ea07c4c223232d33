"""Stochastic optimization of the ELBO: fixed-step SGD, Adam, and SGD with a
geometrically increasing per-iteration sample size."""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import estimators, lds
from .families import FamilySpec
from .models import Model


class OptimizationAborted(RuntimeError):
    def __init__(self, message, trace, lam):
        super().__init__(message)
        self.trace = trace
        self.lam = lam


@dataclass(frozen=True)
class OptimConfig:
    algorithm: str = "adam"
    step_size: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    max_iters: int = 1000
    stop_tol: float = 0.0

    def __post_init__(self):
        if self.algorithm not in ("sgd", "adam"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if not self.step_size > 0:
            raise ValueError("step size must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        if not self.adam_eps > 0:
            raise ValueError("Adam epsilon must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.stop_tol < 0:
            raise ValueError("stop_tol must be non-negative")


@dataclass(frozen=True)
class SampleSchedule:
    """Fixed N, or N_t = n_floor + ceil(tau ** t)."""

    kind: str = "fixed"
    n: int = 10
    n_floor: int = 16
    tau: float = 2.0

    def __post_init__(self):
        if self.kind == "fixed":
            if self.n < 1:
                raise ValueError("fixed sample size must be >= 1")
        elif self.kind == "geometric":
            if self.n_floor < 1 or not self.tau > 1.0:
                raise ValueError("geometric schedule needs n_floor >= 1 and tau > 1")
        else:
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def fixed(cls, n: int) -> "SampleSchedule":
        return cls("fixed", n=n)

    @classmethod
    def geometric(cls, n_floor: int = 16, tau: float = 2.0) -> "SampleSchedule":
        return cls("geometric", n_floor=n_floor, tau=tau)

    @classmethod
    def geometric_reaching(cls, n_final: int, iters: int, n_floor: int = 16) -> "SampleSchedule":
        """Geometric schedule whose last of ``iters`` iterations uses n_final samples."""
        if iters < 2 or n_final - n_floor < 2:
            raise ValueError("need iters >= 2 and n_final > n_floor + 1")
        tau = (n_final - n_floor) ** (1.0 / (iters - 1))
        while n_floor + math.ceil(tau ** (iters - 1)) > n_final:
            tau = np.nextafter(tau, 0.0)
        return cls.geometric(n_floor, float(tau))

    def size(self, t: int) -> int:
        if self.kind == "fixed":
            return self.n
        return self.n_floor + math.ceil(self.tau ** t)


@dataclass
class TraceRecord:
    t: int
    n_t: int
    elbo_est: float
    grad_norm: float
    wall_ns: int
    trvar: Optional[float] = None
    lam: Optional[np.ndarray] = None


@dataclass
class RunResult:
    trace: list
    lam: np.ndarray
    total_samples: int


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size), 0)


def adam_step(state: AdamState, lam, grad, alpha, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam ascent step. Returns (new_state, new_lam)."""
    grad = np.asarray(grad, dtype=np.float64)
    t = state.t + 1
    m = beta1 * state.m + (1.0 - beta1) * grad
    v = beta2 * state.v + (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    return AdamState(m, v, t), np.asarray(lam) + alpha * m_hat / (np.sqrt(v_hat) + eps)


_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def step_seed(master_seed: int, t: int, stream: int = 0) -> int:
    """64-bit batch seed for iteration t: a splitmix64 hash chain over
    (master_seed, stream, t)."""
    h = _splitmix64(master_seed & _MASK64)
    h = _splitmix64(h ^ (stream & _MASK64))
    return _splitmix64(h ^ (t & _MASK64))


def run(model: Model, spec: FamilySpec, lam0, estimator, source_kind, config: OptimConfig,
        schedule: SampleSchedule, seed: int = 0, skip: int = 0,
        monitor: Callable[[int, np.ndarray], Optional[float]] | None = None,
        snapshot_every: int = 0, timing: bool = True) -> RunResult:
    """Maximize the ELBO from lam0.

    A fresh batch of schedule.size(t) points is drawn at every iteration with
    seed step_seed(seed, t). ``monitor(t, lam)`` may return a value stored as
    the record's trvar.
    """
    kind = lds.SequenceKind(source_kind)
    estimator = estimators.EstimatorKind(estimator)
    if (schedule.kind == "geometric" and kind.randomized
            and schedule.n_floor < 2 ** min(model.d_z, 62)):
        warnings.warn(f"n_floor = {schedule.n_floor} is below 2^d = 2^{model.d_z}, the floor "
                      "assumed by the increasing-sample-size convergence bound", stacklevel=2)
    lam = np.array(lam0, dtype=np.float64)
    if lam.shape != (spec.n_params,):
        raise ValueError(f"lam0 must have {spec.n_params} entries")
    adam = AdamState.zeros(lam.size)
    trace: list[TraceRecord] = []
    total = 0
    prev_elbo = None
    start = time.perf_counter_ns()
    for t in range(config.max_iters):
        n_t = schedule.size(t)
        source = lds.SequenceSource(kind, model.d_z, step_seed(seed, t), skip)
        batch = lds.generate(source, n_t)
        est = estimators.estimate(estimator, model, spec, lam, batch, source)
        total += n_t
        trvar = monitor(t, lam) if monitor is not None else None
        wall = time.perf_counter_ns() - start if timing else 0
        rec = TraceRecord(t, n_t, est.elbo_estimate, float(np.linalg.norm(est.grad)), wall, trvar,
                          lam.copy() if snapshot_every and t % snapshot_every == 0 else None)
        trace.append(rec)
        if not est.finite:
            raise OptimizationAborted(
                f"non-finite gradient at iteration {t} ({est.support_violations} support violations)",
                trace, lam)
        if config.algorithm == "sgd":
            lam = lam + config.step_size * est.grad
        else:
            adam, lam = adam_step(adam, lam, est.grad, config.step_size, config.beta1,
                                  config.beta2, config.adam_eps)
        if (config.stop_tol > 0 and prev_elbo is not None
                and abs(est.elbo_estimate - prev_elbo) <= config.stop_tol):
            break
        prev_elbo = est.elbo_estimate
    return RunResult(trace, lam, total)
