import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import norm

from qmcvi import families, lds
from qmcvi.families import Block, BlockKind, FamilySpec


def mixed_spec():
    return FamilySpec((Block("diag-gaussian", 2), Block("diag-lognormal", 2), Block("diag-gaussian", 1, False)))


def _fd(f, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


params = st.lists(st.floats(-1.0, 1.0), min_size=10, max_size=10).map(np.array)


def test_layout():
    spec = mixed_spec()
    assert spec.d_z == 5 and spec.n_params == 10
    lam = np.arange(10.0)
    m, rho, logn = spec.unpack(lam)
    np.testing.assert_array_equal(m, [0, 1, 4, 5, 8])
    np.testing.assert_array_equal(rho, [2, 3, 6, 7, 9])
    np.testing.assert_array_equal(logn, [False, False, True, True, False])
    np.testing.assert_array_equal(spec.pack(m, rho), lam)
    np.testing.assert_array_equal(spec.trainable_mask(), [1] * 9 + [0])
    assert spec.init_params(0.1, -1.0)[9] == 0.0


def test_log_q_matches_scipy():
    spec = mixed_spec()
    lam = spec.pack(np.array([0.1, -0.2, 0.3, 0.0, 1.0]), np.array([0.0, 0.5, -0.5, 0.2, 0.0]))
    z = np.array([0.4, 1.0, 2.0, 0.5, -1.0])
    s = np.exp([0.0, 0.5, -0.5, 0.2, 0.0])
    ref = (norm.logpdf(0.4, 0.1, s[0]) + norm.logpdf(1.0, -0.2, s[1])
           + norm.logpdf(np.log(2.0), 0.3, s[2]) - np.log(2.0)
           + norm.logpdf(np.log(0.5), 0.0, s[3]) - np.log(0.5) + norm.logpdf(-1.0, 1.0, s[4]))
    assert families.log_q(spec, lam, z) == pytest.approx(ref, rel=1e-12)


def test_support():
    spec = mixed_spec()
    lam = np.zeros(10)
    z = np.array([[0.0, 0.0, 1.0, -1.0, 0.0], [0.0, 0.0, 1.0, 1.0, 0.0]])
    np.testing.assert_array_equal(families.in_support(spec, z), [False, True])
    assert families.log_q(spec, lam, z[0]) == -np.inf
    with pytest.raises(ValueError):
        families.score(spec, lam, z[0])


@given(params, st.lists(st.floats(-2, 2), min_size=5, max_size=5))
def test_score_and_z_gradient_match_finite_differences(lam, eps):
    spec = mixed_spec()
    z = families.reparam(spec, lam, np.array(eps))
    np.testing.assert_allclose(families.score(spec, lam, z),
                               _fd(lambda p: families.log_q(spec, p, z), lam), rtol=1e-5, atol=1e-6)
    np.testing.assert_allclose(families.grad_z_log_q(spec, lam, z),
                               _fd(lambda y: families.log_q(spec, lam, y), z), rtol=1e-5, atol=1e-6)


@given(params, st.lists(st.floats(-2, 2), min_size=5, max_size=5),
       st.lists(st.floats(-1, 1), min_size=5, max_size=5))
def test_reparam_vjp(lam, eps, cot):
    spec = mixed_spec()
    eps, cot = np.array(eps), np.array(cot)
    fd = _fd(lambda p: families.reparam(spec, p, eps) @ cot, lam)
    np.testing.assert_allclose(families.reparam_vjp(spec, lam, eps, cot), fd, rtol=1e-5, atol=1e-6)


@given(params)
def test_entropy_gradient(lam):
    spec = mixed_spec()
    fd = _fd(lambda p: families.entropy(spec, p), lam)
    np.testing.assert_allclose(families.entropy_grad(spec, lam), fd, atol=1e-6)


def test_score_has_zero_mean():
    spec = mixed_spec()
    lam = spec.pack(np.array([0.2, -0.1, 0.0, 0.3, 1.0]), np.full(5, -0.3))
    z = families.reparam(spec, lam, np.random.default_rng(0).normal(size=(200_000, 5)))
    s = families.score(spec, lam, z)
    assert np.all(np.abs(s.mean(axis=0)) < 4 * s.std(axis=0) / np.sqrt(len(s)))


def test_reparam_agrees_with_transform():
    spec = mixed_spec()
    lam = spec.pack(np.array([0.2, -0.1, 0.0, 0.3, 1.0]), np.full(5, -0.3))
    batch = lds.generate(lds.SequenceSource("mc", 5, 4), 1000)
    from qmcvi import transforms
    via_transform = transforms.apply(families.to_transform(spec, lam), batch)
    direct = families.reparam(spec, lam, transforms.inverse_normal_cdf(batch.points))
    np.testing.assert_allclose(via_transform, direct, rtol=1e-12)


def test_ks_reparam_distribution():
    from scipy.stats import kstest
    spec = FamilySpec((Block(BlockKind.LOGNORMAL, 1),))
    lam = np.array([0.3, -0.5])
    z = families.reparam(spec, lam, np.random.default_rng(1).normal(size=(5000, 1)))[:, 0]
    assert kstest(np.log(z), "norm", args=(0.3, np.exp(-0.5))).pvalue > 0.01


def test_bad_params():
    with pytest.raises(ValueError):
        mixed_spec().unpack(np.zeros(9))
    with pytest.raises(ValueError):
        Block("diag-gaussian", 0)
