"""Mean-field variational families.

Parameter layout: blocks in order; within a block all means come first, then
all log-scales rho (sigma = exp(rho)). A block with ``learn_scale=False`` keeps
its log-scales in the vector but their gradient is masked to zero.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import transforms

LOG_2PI = np.log(2.0 * np.pi)


class BlockKind(str, enum.Enum):
    GAUSSIAN = "diag-gaussian"
    LOGNORMAL = "diag-lognormal"


@dataclass(frozen=True)
class Block:
    kind: BlockKind
    dim: int
    learn_scale: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", BlockKind(self.kind))
        if self.dim < 1:
            raise ValueError("block dimension must be >= 1")


@dataclass(frozen=True)
class FamilySpec:
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(b if isinstance(b, Block) else Block(*b) for b in self.blocks)
        if not blocks:
            raise ValueError("a family needs at least one block")
        object.__setattr__(self, "blocks", blocks)
        mean_idx, rho_idx, logn = [], [], []
        for b, _, ms, rs in self.slices():
            mean_idx.extend(range(ms.start, ms.stop))
            rho_idx.extend(range(rs.start, rs.stop))
            logn.extend([b.kind is BlockKind.LOGNORMAL] * b.dim)
        object.__setattr__(self, "_mean_idx", np.array(mean_idx))
        object.__setattr__(self, "_rho_idx", np.array(rho_idx))
        object.__setattr__(self, "_logn", np.array(logn))

    @property
    def d_z(self) -> int:
        return sum(b.dim for b in self.blocks)

    @property
    def n_params(self) -> int:
        return 2 * self.d_z

    def slices(self):
        """Yield (block, z-slice, mean-slice, log-scale-slice)."""
        z0 = p0 = 0
        for b in self.blocks:
            yield (b, slice(z0, z0 + b.dim), slice(p0, p0 + b.dim),
                   slice(p0 + b.dim, p0 + 2 * b.dim))
            z0 += b.dim
            p0 += 2 * b.dim

    def unpack(self, lam):
        """Return (means, log-scales, lognormal-mask) as z-aligned vectors."""
        lam = np.asarray(lam, dtype=np.float64)
        if lam.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got shape {lam.shape}")
        return lam[self._mean_idx], lam[self._rho_idx], self._logn

    def pack(self, dm, drho) -> np.ndarray:
        """Inverse of unpack for (..., d_z)-shaped mean/log-scale arrays."""
        dm, drho = np.asarray(dm), np.asarray(drho)
        out = np.empty(dm.shape[:-1] + (self.n_params,))
        out[..., self._mean_idx] = dm
        out[..., self._rho_idx] = drho
        return out

    def trainable_mask(self) -> np.ndarray:
        mask = np.ones(self.n_params)
        for b, _, _, rs in self.slices():
            if not b.learn_scale:
                mask[rs] = 0.0
        return mask

    def init_params(self, mean=0.0, log_scale=0.0) -> np.ndarray:
        m = np.broadcast_to(np.asarray(mean, dtype=np.float64), (self.d_z,))
        r = np.broadcast_to(np.asarray(log_scale, dtype=np.float64), (self.d_z,)).copy()
        for b, zs, _, _ in self.slices():
            if not b.learn_scale:
                r[zs] = 0.0
        return self.pack(m, r)


def gaussian(d: int, learn_scale: bool = True) -> FamilySpec:
    return FamilySpec((Block(BlockKind.GAUSSIAN, d, learn_scale),))


def _log_space(z, logn):
    """log z on lognormal coordinates, z elsewhere; plus support mask per row."""
    z = np.asarray(z, dtype=np.float64)
    ok = ~np.any(logn & ~(z > 0.0), axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(logn, np.log(np.where(z > 0.0, z, 1.0)), z)
    return w, ok


def in_support(spec: FamilySpec, z) -> np.ndarray:
    return _log_space(z, spec._logn)[1]


def log_q(spec: FamilySpec, lam, z):
    """Log density of q(z | lam); -inf where z leaves the support.
    z may be a single vector or an (n, d_z) batch."""
    m, rho, logn = spec.unpack(lam)
    w, ok = _log_space(z, logn)
    r = (w - m) * np.exp(-rho)
    terms = -0.5 * r * r - rho - 0.5 * LOG_2PI - np.where(logn, w, 0.0)
    return np.where(ok, terms.sum(axis=-1), -np.inf)


def score(spec: FamilySpec, lam, z) -> np.ndarray:
    """Gradient of log_q with respect to lam (rows for batched z)."""
    m, rho, logn = spec.unpack(lam)
    w, ok = _log_space(z, logn)
    if not np.all(ok):
        raise ValueError("z outside the support of the variational family")
    inv_var = np.exp(-2.0 * rho)
    diff = w - m
    return spec.pack(diff * inv_var, diff * diff * inv_var - 1.0)


def grad_z_log_q(spec: FamilySpec, lam, z) -> np.ndarray:
    m, rho, logn = spec.unpack(lam)
    z = np.asarray(z, dtype=np.float64)
    w, _ = _log_space(z, logn)
    g = -(w - m) * np.exp(-2.0 * rho)
    return np.where(logn, (g - 1.0) / np.where(logn, z, 1.0), g)


def reparam(spec: FamilySpec, lam, eps) -> np.ndarray:
    m, rho, logn = spec.unpack(lam)
    # overflow yields inf, which estimators report as non-finite
    with np.errstate(over="ignore"):
        z = m + np.exp(rho) * np.asarray(eps, dtype=np.float64)
        z[..., logn] = np.exp(z[..., logn])
    return z


def reparam_vjp(spec: FamilySpec, lam, eps, cotangent) -> np.ndarray:
    """cotangent^T d g_lam(eps) / d lam, batched over leading axes."""
    m, rho, logn = spec.unpack(lam)
    sigma = np.exp(rho)
    eps = np.asarray(eps, dtype=np.float64)
    ct = np.asarray(cotangent, dtype=np.float64)
    dm = ct * np.ones_like(eps)
    dm[..., logn] *= np.exp(m[logn] + sigma[logn] * eps[..., logn])
    return spec.pack(dm, dm * sigma * eps)


def entropy(spec: FamilySpec, lam) -> float:
    m, rho, logn = spec.unpack(lam)
    return float(np.sum(rho + 0.5 * (1.0 + LOG_2PI) + np.where(logn, m, 0.0)))


def entropy_grad(spec: FamilySpec, lam) -> np.ndarray:
    _, _, logn = spec.unpack(lam)
    return spec.pack(logn.astype(np.float64), np.ones(spec.d_z))


def to_transform(spec: FamilySpec, lam) -> transforms.TransformSpec:
    """The uniform-to-sample map whose output is distributed as q(.|lam)."""
    m, rho, _ = spec.unpack(lam)
    sigma = np.exp(rho)
    blocks = []
    for b, zs, _, _ in spec.slices():
        if b.kind is BlockKind.GAUSSIAN:
            blocks.append(transforms.MultivariateNormal(zs.start, zs.stop, m[zs], np.diag(sigma[zs])))
        else:
            blocks.append(transforms.LogNormal(zs.start, zs.stop, m[zs], sigma[zs]))
    return transforms.TransformSpec(blocks)
