"""Acceptance checks with their pinned tolerances.

Each ``check_*`` function runs one criterion and returns a Check. The pytest
acceptance module runs them at full size; ``qmcvi selftest`` runs the fast
ones.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy.special import ndtr

from . import diagnostics, estimators, lds, models, optim, transforms


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: str
    detail: str = ""
    seconds: float = 0.0
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: value={self.value:.6g} ({self.threshold}) {self.detail}".rstrip()


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        chk = fn(*args, **kwargs)
        chk.seconds = time.perf_counter() - start
        return chk
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# --- independent Sobol' reference -----------------------------------------

def _radical_inverse_base2(i: int, bits: int = 32) -> int:
    out = 0
    for b in range(bits):
        if (i >> b) & 1:
            out |= 1 << (bits - 1 - b)
    return out


def reference_sobol(n: int, d: int, bits: int = 32) -> np.ndarray:
    """Point-by-point Sobol' generator in Gray-code order, written directly
    from the direction-number file with Python integers."""
    text = resources.files("qmcvi").joinpath("data/joe_kuo_2048.txt").read_text()
    rows = [list(map(int, ln.split())) for ln in text.splitlines()
            if ln.strip() and ln.strip()[0].isdigit()]
    dirs = [[1 << (bits - 1 - k) for k in range(bits)]]
    for _, s, a, *m0 in rows[:d - 1]:
        # polynomial coefficients c_1..c_{s-1} from the interior bits of a
        c = [(a >> (s - 1 - i)) & 1 for i in range(1, s)]
        m = list(m0)
        while len(m) < bits:
            k = len(m)
            val = m[k - s] ^ (m[k - s] << s)
            for i, ci in enumerate(c, start=1):
                if ci:
                    val ^= m[k - i] << i
            m.append(val)
        dirs.append([m[k] << (bits - 1 - k) for k in range(bits)])
    out = np.zeros((n, d))
    for i in range(n):
        g = i ^ (i >> 1)
        for j in range(d):
            x = 0
            for k in range(bits):
                if (g >> k) & 1:
                    x ^= dirs[j][k]
            out[i, j] = x / 2.0 ** bits
    return out


@_timed
def check_sequence(n: int = 64) -> Check:
    pts = lds.sobol(n, 4).points
    vdc = np.array([_radical_inverse_base2(i ^ (i >> 1)) / 2.0 ** 32 for i in range(n)])
    dim1 = np.array_equal(pts[:, 0], vdc)
    rest = np.array_equal(pts, reference_sobol(n, 4))
    prefix = pts[:4, 0].tolist() == [0.0, 0.5, 0.75, 0.25]
    ok = dim1 and rest and prefix
    return Check("sobol sequence correctness", ok, float(ok), "exact match, 64 points, dims 1-4",
                 f"dim1={dim1} dims1-4={rest} prefix={prefix}")


@_timed
def check_inverse_cdf(points: int = 10_000) -> Check:
    u = np.linspace(1e-10, 1.0 - 1e-10, points)
    err = float(np.max(np.abs(ndtr(transforms.inverse_normal_cdf(u)) - u)))
    return Check("inverse normal cdf round trip", err <= 1e-9, err, "max |Phi(Phi^-1(u)) - u| <= 1e-9")


@_timed
def check_integration_rates(randomizations: int = 100, seed: int = 0) -> Check:
    ns = [2 ** k for k in range(4, 13)]
    mc = diagnostics.integration_study("mc", 4, ns, randomizations, seed)
    rq = diagnostics.integration_study("rqmc-scramble", 4, ns, randomizations, seed)
    qmc = diagnostics.integration_study("qmc", 4, ns[-1:], 1, seed)
    mc_fit = diagnostics.rate_fit([(n, v) for n, v, _ in mc])
    rq_fit = diagnostics.rate_fit([(n, v) for n, v, _ in rq])
    qmc_err, mc_rmse = qmc[0][2], mc[-1][2]
    ok = abs(mc_fit.slope + 1.0) <= 0.15 and rq_fit.slope <= -1.8 and qmc_err < mc_rmse
    return Check("integration rates", ok, rq_fit.slope,
                 "MC slope -1 +/- 0.15, RQMC slope <= -1.8, QMC err < MC RMSE at 2^12",
                 f"mc_slope={mc_fit.slope:.3f} rqmc_slope={rq_fit.slope:.3f} "
                 f"qmc_err={qmc_err:.3g} mc_rmse={mc_rmse:.3g}",
                 metrics={"mc": mc, "rqmc-scramble": rq, "qmc": qmc,
                          "mc_slope": mc_fit.slope, "rqmc_slope": rq_fit.slope})


def _toy_setup(m=0.1):
    toy = models.toy_gaussian(2)
    spec = toy.default_family()
    return toy, spec, spec.init_params(m)


@_timed
def check_unbiasedness(randomizations: int = 500, n: int = 10, seed: int = 0) -> Check:
    toy, spec, lam = _toy_setup()
    target = np.array([-0.1, -0.1])
    worst = 0.0
    parts = []
    for kind in ("reparam", "score"):
        g = np.array([
            estimators.estimate(kind, toy, spec, lam, lds.generate(
                lds.SequenceSource("rqmc-scramble", 2, optim.step_seed(seed, r, 0xB1A5)), n)).grad[:2]
            for r in range(randomizations)])
        se = g.std(axis=0, ddof=1) / np.sqrt(randomizations)
        z = np.abs(g.mean(axis=0) - target) / se
        worst = max(worst, float(z.max()))
        parts.append(f"{kind}: mean={np.round(g.mean(axis=0), 5).tolist()} z={np.round(z, 2).tolist()}")
    return Check("estimator unbiasedness", worst <= 3.0, worst, "|mean - (-0.1,-0.1)| <= 3 SE",
                 "; ".join(parts))


@_timed
def check_variance_separation(resamples: int = 300, seed: int = 0) -> Check:
    toy, spec, lam = _toy_setup()
    ns = [2 ** k for k in range(4, 11)]
    mc = diagnostics.gradient_rate_study(toy, spec, lam, "reparam", "mc", ns, resamples, seed)
    rq = diagnostics.gradient_rate_study(toy, spec, lam, "reparam", "rqmc-scramble", ns, resamples, seed)
    mc_fit, rq_fit = diagnostics.rate_fit(mc), diagnostics.rate_fit(rq)
    ratio = dict(rq)[256] / dict(mc)[256]
    ok = abs(mc_fit.slope + 1.0) <= 0.15 and rq_fit.slope <= -1.8 and ratio <= 0.1
    return Check("gradient variance separation", ok, ratio,
                 "MC slope -1 +/- 0.15, RQMC slope <= -1.8, ratio at N=256 <= 0.1",
                 f"mc_slope={mc_fit.slope:.3f} rqmc_slope={rq_fit.slope:.3f}",
                 metrics={"mc": mc, "rqmc-scramble": rq})


def _toy_gap_trace(kind, cfg, schedule, seed, keep_from=0):
    toy, spec, lam0 = _toy_setup()
    gaps = []

    def monitor(t, lam):
        if t >= keep_from:
            gaps.append(-toy.exact_elbo(lam))
        return None

    res = optim.run(toy, spec, lam0, "reparam", kind, cfg, schedule, seed=seed,
                    monitor=monitor, timing=False)
    gaps.append(-toy.exact_elbo(res.lam))
    return np.array(gaps)


@_timed
def check_plateau(seeds: int = 20, iters: int = 2000, alpha: float = 0.05, n: int = 64) -> Check:
    cfg = optim.OptimConfig("sgd", alpha, max_iters=iters)
    sched = optim.SampleSchedule.fixed(n)
    level = {}
    for kind in ("mc", "rqmc-scramble"):
        # mean gap over the last 100 iterates of every seed
        level[kind] = float(np.mean([_toy_gap_trace(kind, cfg, sched, s, iters - 99).mean()
                                     for s in range(seeds)]))
    ratio = level["rqmc-scramble"] / level["mc"]
    ok = 0 < level["rqmc-scramble"] < level["mc"]
    return Check("fixed-step plateau", ok, ratio, "0 < gap(RQMC) < gap(MC)",
                 f"mc={level['mc']:.4g} rqmc={level['rqmc-scramble']:.4g}", metrics=level)


@_timed
def check_increasing_samples(iters: int = 10_000, seeds: int = 4, alpha: float = 0.001,
                             n_final: int = 50_000, n_floor: int = 16) -> Check:
    cfg = optim.OptimConfig("sgd", alpha, max_iters=iters)
    sched = optim.SampleSchedule.geometric_reaching(n_final, iters, n_floor)
    start = 2 * iters // 3
    t = np.arange(start, iters + 1)
    slopes = {}
    for kind in ("mc", "rqmc-scramble"):
        gap = np.mean([_toy_gap_trace(kind, cfg, sched, s, start) for s in range(seeds)], axis=0)
        slopes[kind] = float(np.polyfit(t, np.log(gap), 1)[0])
    ratio = slopes["rqmc-scramble"] / slopes["mc"]
    ok = slopes["mc"] < 0 and ratio >= 1.5
    return Check("increasing sample size rate", ok, ratio, "slope(RQMC) / slope(MC) >= 1.5",
                 f"mc_slope={slopes['mc']:.3e} rqmc_slope={slopes['rqmc-scramble']:.3e} "
                 f"tau={sched.tau:.6f}", metrics=slopes)


@_timed
def check_sample_efficiency(adam_steps: int = 200, resamples: int = 1000, seed: int = 1) -> Check:
    model = models.hierarchical_lr(10, 3, 0)
    spec = model.default_family()
    res = optim.run(model, spec, spec.init_params(0.0, -1.0), "reparam", "rqmc-scramble",
                    optim.OptimConfig("adam", 0.1, max_iters=adam_steps),
                    optim.SampleSchedule.fixed(10), seed=seed, timing=False)
    rq = diagnostics.grad_variance(model, spec, res.lam, "reparam", "rqmc-scramble", 10, resamples, seed)
    mc = diagnostics.grad_variance(model, spec, res.lam, "reparam", "mc", 100, resamples, seed)
    ratio = rq.trace_of_variance / mc.trace_of_variance
    return Check("rqmc(10) vs mc(100) gradient variance", ratio <= 2.0, ratio,
                 "trVar(RQMC, 10) <= 2 trVar(MC, 100)",
                 f"rqmc10={rq.trace_of_variance:.4g} mc100={mc.trace_of_variance:.4g} d_z={model.d_z}")


def _fd_grad(f, z, rel_step=1e-6):
    g = np.empty_like(z)
    for i in range(z.size):
        h = rel_step * max(1.0, abs(z[i]))
        e = np.zeros_like(z)
        e[i] = h
        g[i] = (f(z + e) - f(z - e)) / (2.0 * h)
    return g


def random_support_point(model: models.Model, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=model.d_z)
    if isinstance(model, models.HierarchicalLR):
        z[model.k:model.k + 2] = np.exp(rng.normal(0.0, 0.5, size=2))
    elif isinstance(model, models.MultilevelPoisson):
        z[0] = -1.0 + 0.5 * z[0]
        z[3:] *= 0.5
    return z


@_timed
def check_model_gradients(points: int = 50, seed: int = 0) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for model in (models.toy_gaussian(3), models.hierarchical_lr(10, 3, seed),
                  models.multilevel_poisson(4, 30, seed)):
        for _ in range(points):
            z = random_support_point(model, rng)
            fd = _fd_grad(model.log_joint, z)
            err = np.linalg.norm(model.grad_z(z) - fd) / max(np.linalg.norm(fd), 1e-300)
            worst = max(worst, float(err))
    return Check("model gradients vs finite differences", worst <= 1e-5, worst,
                 "relative error <= 1e-5")


@_timed
def check_poisson_end_to_end(seeds: int = 5, iters: int = 1000, n: int = 50, alpha: float = 0.1) -> Check:
    model = models.multilevel_poisson(4, 30, 0)
    spec = model.default_family()
    lam0 = spec.init_params(0.0, -2.0)
    final = {}
    for kind in ("mc", "rqmc-scramble"):
        vals = []
        for s in range(seeds):
            res = optim.run(model, spec, lam0, "reparam", kind, optim.OptimConfig("adam", alpha, max_iters=iters),
                            optim.SampleSchedule.fixed(n), seed=s, timing=False)
            vals.append(diagnostics.elbo_highprec(model, spec, res.lam).value)
        final[kind] = vals
    med = {k: float(np.median(v)) for k, v in final.items()}
    ok = med["rqmc-scramble"] >= med["mc"]
    return Check("poisson GLM terminal ELBO", ok, med["rqmc-scramble"] - med["mc"],
                 "median ELBO(RQMC) >= median ELBO(MC)",
                 f"mc={med['mc']:.4f} rqmc={med['rqmc-scramble']:.4f} d_z={model.d_z}", metrics=final)


FAST_CHECKS = (check_sequence, check_inverse_cdf, check_integration_rates, check_unbiasedness,
               check_variance_separation, check_model_gradients)
