"""Built-in Bayesian models: log joint density log p(x, z) with all normalizing
constants, its analytic z-gradient, and synthetic data generators.

All evaluation methods accept a single latent vector or an (n, d_z) batch.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .families import Block, BlockKind, FamilySpec

LOG_2PI = np.log(2.0 * np.pi)


def _log_normal_pdf(v, mean, sd):
    r = (v - mean) / sd
    return -0.5 * LOG_2PI - np.log(sd) - 0.5 * r * r


def _log_lognormal_pdf(s, scale):
    ls = np.log(s)
    return -0.5 * LOG_2PI - np.log(scale) - ls - 0.5 * (ls / scale) ** 2


def _as_batch(z, d):
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    z2 = np.atleast_2d(z)
    if z2.shape[-1] != d:
        raise ValueError(f"expected latent dimension {d}, got {z2.shape[-1]}")
    return z2, single


class Model:
    name: str
    d_z: int

    def in_support(self, z) -> np.ndarray:
        z2, single = _as_batch(z, self.d_z)
        ok = np.ones(z2.shape[0], dtype=bool)
        return ok[0] if single else ok

    def log_joint(self, z):
        z2, single = _as_batch(z, self.d_z)
        ok = self.in_support(z2)
        safe = np.where(ok[:, None], z2, self._interior())
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.where(ok, self._log_joint(safe), -np.inf)
        return out[0] if single else out

    def grad_z(self, z):
        z2, single = _as_batch(z, self.d_z)
        if not np.all(self.in_support(z2)):
            raise ValueError(f"{self.name}: latent value outside the model support")
        g = self._grad_z(z2)
        return g[0] if single else g

    def _interior(self) -> np.ndarray:
        return np.ones(self.d_z)

    def _log_joint(self, z):
        raise NotImplementedError

    def _grad_z(self, z):
        raise NotImplementedError

    def default_family(self) -> FamilySpec:
        return FamilySpec((Block(BlockKind.GAUSSIAN, self.d_z),))


@dataclass(frozen=True)
class ToyGaussian(Model):
    """Standard normal target N(0, I_d); no data."""

    d: int
    name: str = field(default="toy", init=False)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def d_z(self):
        return self.d

    def _log_joint(self, z):
        return -0.5 * np.sum(z * z, axis=1) - 0.5 * self.d * LOG_2PI

    def _grad_z(self, z):
        return -z

    def default_family(self) -> FamilySpec:
        """Unit-scale Gaussian with only the means trained."""
        return FamilySpec((Block(BlockKind.GAUSSIAN, self.d, learn_scale=False),))

    def exact_elbo(self, lam) -> float:
        """Closed-form ELBO for a diagonal Gaussian in the standard layout."""
        lam = np.asarray(lam, dtype=np.float64)
        m, rho = lam[:self.d], lam[self.d:]
        return float(-0.5 * m @ m + np.sum(rho - 0.5 * np.exp(2.0 * rho) + 0.5))


def toy_gaussian(d: int) -> ToyGaussian:
    return ToyGaussian(d)


@dataclass(frozen=True, eq=False)
class HierarchicalLR(Model):
    """Hierarchical linear regression with one coefficient vector per observation.

    Latent layout: (mu_beta[k], sigma_beta, noise, b[I, k] row-major).
    sigma_beta and noise are standard deviations with LogNormal(0, 0.5) priors.
    """

    x: np.ndarray
    y: np.ndarray
    mu_prior_sd: float = 10.0
    lognormal_scale: float = 0.5
    name: str = field(default="hierarchical_lr", init=False)

    @property
    def groups(self) -> int:
        return self.x.shape[0]

    @property
    def k(self) -> int:
        return self.x.shape[1]

    @property
    def d_z(self):
        return self.groups * self.k + self.k + 2

    def _interior(self):
        return np.ones(self.d_z)

    def _split(self, z):
        k = self.k
        return z[:, :k], z[:, k], z[:, k + 1], z[:, k + 2:].reshape(z.shape[0], self.groups, k)

    def in_support(self, z):
        z2, single = _as_batch(z, self.d_z)
        ok = (z2[:, self.k] > 0.0) & (z2[:, self.k + 1] > 0.0)
        return ok[0] if single else ok

    def _log_joint(self, z):
        mu, sb, noise, b = self._split(z)
        lp = np.sum(_log_normal_pdf(mu, 0.0, self.mu_prior_sd), axis=1)
        lp += _log_lognormal_pdf(sb, self.lognormal_scale)
        lp += _log_lognormal_pdf(noise, self.lognormal_scale)
        lp += np.sum(_log_normal_pdf(b, mu[:, None, :], sb[:, None, None]), axis=(1, 2))
        pred = np.einsum("nik,ik->ni", b, self.x)
        lp += np.sum(_log_normal_pdf(self.y, pred, noise[:, None]), axis=1)
        return lp

    def _grad_z(self, z):
        mu, sb, noise, b = self._split(z)
        tau2 = self.lognormal_scale ** 2
        dev = b - mu[:, None, :]
        resid = self.y - np.einsum("nik,ik->ni", b, self.x)
        g = np.empty_like(z)
        k = self.k
        g[:, :k] = -mu / self.mu_prior_sd ** 2 + dev.sum(axis=1) / sb[:, None] ** 2
        n_b = self.groups * k
        g[:, k] = (-(1.0 + np.log(sb) / tau2) / sb - n_b / sb
                   + np.sum(dev * dev, axis=(1, 2)) / sb ** 3)
        g[:, k + 1] = (-(1.0 + np.log(noise) / tau2) / noise - self.groups / noise
                       + np.sum(resid * resid, axis=1) / noise ** 3)
        gb = -dev / sb[:, None, None] ** 2 + resid[:, :, None] * self.x / noise[:, None, None] ** 2
        g[:, k + 2:] = gb.reshape(z.shape[0], -1)
        return g

    def default_family(self) -> FamilySpec:
        """Mirrors the priors: Gaussian means, lognormal scales, Gaussian coefficients."""
        return FamilySpec((Block(BlockKind.GAUSSIAN, self.k), Block(BlockKind.LOGNORMAL, 2),
                           Block(BlockKind.GAUSSIAN, self.groups * self.k)))


def hierarchical_lr(groups: int, k: int, seed: int = 0) -> HierarchicalLR:
    """Simulate covariates and responses from the generative process."""
    if groups < 1 or k < 1:
        raise ValueError("groups and k must be >= 1")
    rng = np.random.default_rng(seed)
    mu = rng.normal(0.0, 10.0, size=k)
    sb, noise = np.exp(rng.normal(0.0, 0.5, size=2))
    b = rng.normal(mu, sb, size=(groups, k))
    x = rng.normal(size=(groups, k))
    y = rng.normal(np.sum(x * b, axis=1), noise)
    return HierarchicalLR(x, y)


@dataclass(frozen=True, eq=False)
class MultilevelPoisson(Model):
    """Poisson GLM with ethnicity and precinct effects.

    Latent layout: (mu, log sigma_alpha^2, log sigma_beta^2, alpha[E], beta[P]).
    """

    exposure: np.ndarray
    counts: np.ndarray
    prior_sd: float = 10.0
    name: str = field(default="multilevel_poisson", init=False)

    def __post_init__(self):
        if self.exposure.shape != self.counts.shape or self.exposure.ndim != 2:
            raise ValueError("exposure and counts must be matching (E, P) arrays")

    @property
    def n_eth(self):
        return self.exposure.shape[0]

    @property
    def n_prec(self):
        return self.exposure.shape[1]

    @property
    def d_z(self):
        return 3 + self.n_eth + self.n_prec

    def _interior(self):
        return np.zeros(self.d_z)

    def _split(self, z):
        E = self.n_eth
        return z[:, 0], z[:, 1], z[:, 2], z[:, 3:3 + E], z[:, 3 + E:]

    def _eta(self, mu, alpha, beta):
        return mu[:, None, None] + alpha[:, :, None] + beta[:, None, :] + np.log(self.exposure)

    def _log_joint(self, z):
        mu, la, lb, alpha, beta = self._split(z)
        lp = (_log_normal_pdf(mu, 0.0, self.prior_sd) + _log_normal_pdf(la, 0.0, self.prior_sd)
              + _log_normal_pdf(lb, 0.0, self.prior_sd))
        lp += np.sum(_log_normal_pdf(alpha, 0.0, np.exp(0.5 * la)[:, None]), axis=1)
        lp += np.sum(_log_normal_pdf(beta, 0.0, np.exp(0.5 * lb)[:, None]), axis=1)
        eta = self._eta(mu, alpha, beta)
        lp += np.sum(self.counts * eta - np.exp(eta) - gammaln(self.counts + 1.0), axis=(1, 2))
        return lp

    def _grad_z(self, z):
        mu, la, lb, alpha, beta = self._split(z)
        resid = self.counts - np.exp(self._eta(mu, alpha, beta))
        v = self.prior_sd ** 2
        g = np.empty_like(z)
        E = self.n_eth
        g[:, 0] = -mu / v + resid.sum(axis=(1, 2))
        g[:, 1] = -la / v - 0.5 * E + 0.5 * np.sum(alpha * alpha, axis=1) * np.exp(-la)
        g[:, 2] = -lb / v - 0.5 * self.n_prec + 0.5 * np.sum(beta * beta, axis=1) * np.exp(-lb)
        g[:, 3:3 + E] = -alpha * np.exp(-la)[:, None] + resid.sum(axis=2)
        g[:, 3 + E:] = -beta * np.exp(-lb)[:, None] + resid.sum(axis=1)
        return g


def multilevel_poisson(n_eth: int, n_prec: int, seed: int = 0, mu: float = -1.0,
                       sigma_alpha: float = 0.5, sigma_beta: float = 0.8) -> MultilevelPoisson:
    """Simulate exposures (log-uniform in [1e2, 1e4]) and counts.

    The data-generating mu, sigma_alpha and sigma_beta are fixed arguments;
    effects alpha and beta are drawn from their conditional priors.
    """
    if n_eth < 1 or n_prec < 1:
        raise ValueError("n_eth and n_prec must be >= 1")
    rng = np.random.default_rng(seed)
    exposure = np.exp(rng.uniform(np.log(1e2), np.log(1e4), size=(n_eth, n_prec)))
    alpha = rng.normal(0.0, sigma_alpha, size=n_eth)
    beta = rng.normal(0.0, sigma_beta, size=n_prec)
    rate = exposure * np.exp(mu + alpha[:, None] + beta[None, :])
    counts = rng.poisson(rate).astype(np.float64)
    return MultilevelPoisson(exposure, counts)


def log_joint(model: Model, z):
    return model.log_joint(z)


def grad_z(model: Model, z):
    return model.grad_z(z)


MODELS = {"toy": toy_gaussian, "hierarchical_lr": hierarchical_lr, "multilevel_poisson": multilevel_poisson}
