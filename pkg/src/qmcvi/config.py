"""Experiment configuration: a flat dataclass stored as ``key = value`` text.

Lines starting with ``#`` are comments. Tuple-valued keys are comma-separated.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from . import families, models
from .estimators import EstimatorKind
from .lds import SequenceKind
from .optim import OptimConfig, SampleSchedule

MODEL_ALIASES = {"toy": "toy", "hlr": "hierarchical_lr", "hierarchical_lr": "hierarchical_lr",
                 "poisson": "multilevel_poisson", "multilevel_poisson": "multilevel_poisson"}
MANIFEST_ONLY = ("artifact_version", "command")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "toy"
    d: int = 2
    groups: int = 10
    covariates: int = 3
    ethnicities: int = 4
    precincts: int = 30
    data_seed: int = 0
    estimator: str = "reparam"
    seq: str = "rqmc-scramble"
    n: int = 10
    schedule: str = "fixed"
    n_floor: int = 16
    tau: float = 0.0
    n_final: int = 50_000
    opt: str = "adam"
    alpha: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    iters: int = 100
    stop_tol: float = 0.0
    init_mean: float = 0.1
    init_log_scale: float = 0.0
    seed: int = 0
    skip: int = 0
    out: str = "out"
    var_every: int = 0
    resamples: int = 1000
    eval_every: int = 0
    timing: bool = False
    sweep_seqs: tuple = ("mc", "rqmc-scramble")
    sweep_ns: tuple = (10, 50)

    def validate(self) -> "ExperimentConfig":
        """Resolve and check every referenced component; raises ConfigError."""
        try:
            if self.model not in MODEL_ALIASES:
                raise ValueError(f"unknown model {self.model!r}")
            EstimatorKind(self.estimator)
            SequenceKind(self.seq)
            for s in self.sweep_seqs:
                SequenceKind(s)
            if any(n < 1 for n in self.sweep_ns) or not self.sweep_ns:
                raise ValueError("sweep_ns must be positive sample sizes")
            self.optim_config()
            self.sample_schedule()
            self.build_model()
            for k in ("var_every", "eval_every", "skip"):
                if getattr(self, k) < 0:
                    raise ValueError(f"{k} must be non-negative")
            if self.var_every and self.resamples < 2:
                raise ValueError("resamples must be >= 2")
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def optim_config(self) -> OptimConfig:
        return OptimConfig(self.opt, self.alpha, self.beta1, self.beta2, self.adam_eps,
                           self.iters, self.stop_tol)

    def sample_schedule(self, n: int | None = None) -> SampleSchedule:
        if self.schedule == "fixed":
            return SampleSchedule.fixed(n or self.n)
        if self.schedule == "geometric":
            if self.tau > 0:
                return SampleSchedule.geometric(self.n_floor, self.tau)
            return SampleSchedule.geometric_reaching(self.n_final, self.iters, self.n_floor)
        raise ValueError(f"unknown schedule {self.schedule!r}")

    def build_model(self) -> models.Model:
        name = MODEL_ALIASES[self.model]
        if name == "toy":
            return models.toy_gaussian(self.d)
        if name == "hierarchical_lr":
            return models.hierarchical_lr(self.groups, self.covariates, self.data_seed)
        return models.multilevel_poisson(self.ethnicities, self.precincts, self.data_seed)

    def initial_params(self, spec: families.FamilySpec):
        return spec.init_params(self.init_mean, self.init_log_scale)


def _field_types():
    return {f.name: f.type for f in fields(ExperimentConfig)}


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_value(key: str, text: str):
    kind = _field_types()[key]
    default = getattr(ExperimentConfig(), key)
    text = text.strip()
    try:
        if kind == "bool":
            if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return text.lower() in ("true", "1", "yes")
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "tuple":
            items = [t.strip() for t in text.split(",") if t.strip()]
            return tuple(int(t) for t in items) if isinstance(default[0], int) else tuple(items)
        return text
    except ValueError:
        raise ConfigError(f"invalid value for {key}: {text!r}") from None


def serialize(cfg: ExperimentConfig) -> str:
    return "".join(f"{f.name} = {_format(getattr(cfg, f.name))}\n" for f in fields(cfg))


def parse(text: str) -> dict:
    """Parse config text into a dict of typed overrides."""
    known = _field_types()
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in MANIFEST_ONLY:
            continue
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = parse_value(key, value)
    return out


def loads(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    return dataclasses.replace(base or ExperimentConfig(), **parse(text))


def load(path: str | Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return loads(text, base)
