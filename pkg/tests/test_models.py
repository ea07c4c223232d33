import numpy as np
import pytest
from scipy.special import gammaln
from scipy.stats import norm

from qmcvi import models
from qmcvi.acceptance import _fd_grad, random_support_point


ALL = [models.toy_gaussian(3), models.hierarchical_lr(4, 2, seed=1), models.multilevel_poisson(3, 5, seed=2)]


@pytest.mark.parametrize("model", ALL, ids=lambda m: m.name)
def test_gradients_match_finite_differences(model):
    rng = np.random.default_rng(0)
    for _ in range(10):
        z = random_support_point(model, rng)
        g = models.grad_z(model, z)
        fd = _fd_grad(lambda v: float(models.log_joint(model, v)), z)
        assert np.linalg.norm(g - fd) <= 1e-5 * max(1.0, np.linalg.norm(fd))


@pytest.mark.parametrize("model", ALL, ids=lambda m: m.name)
def test_batch_and_single_agree(model):
    rng = np.random.default_rng(3)
    z = np.stack([random_support_point(model, rng) for _ in range(4)])
    lp = models.log_joint(model, z)
    assert lp.shape == (4,)
    assert lp[2] == pytest.approx(float(models.log_joint(model, z[2])))
    np.testing.assert_allclose(models.grad_z(model, z)[1], models.grad_z(model, z[1]))


def test_toy_log_joint():
    m = models.toy_gaussian(2)
    assert models.log_joint(m, np.array([1.0, 2.0])) == pytest.approx(-2.5 - np.log(2 * np.pi))
    lam = m.default_family().init_params(np.array([0.3, -0.4]), 0.0)
    assert m.exact_elbo(lam) == pytest.approx(-0.125 + 0.0)


def test_poisson_hand_value():
    model = models.MultilevelPoisson(np.array([[50.0]]), np.array([[7.0]]))
    z = np.zeros(5)
    ref = 3 * norm.logpdf(0, 0, 10) + 2 * norm.logpdf(0, 0, 1) + 7 * np.log(50.0) - 50.0 - gammaln(8.0)
    assert models.log_joint(model, z) == pytest.approx(ref, rel=1e-12)


def test_poisson_dimension():
    assert models.multilevel_poisson(4, 30).d_z == 37


def test_hlr_dimension_and_support():
    m = models.hierarchical_lr(10, 3)
    assert m.d_z == 35
    z = np.ones(35)
    z[3] = -1.0
    assert not m.in_support(z)
    assert models.log_joint(m, z) == -np.inf
    with pytest.raises(ValueError):
        models.grad_z(m, z)


def test_hlr_coefficient_pulled_toward_data():
    # with one group and one covariate, the log-joint gradient in b points at y / x
    m = models.HierarchicalLR(np.array([[1.0]]), np.array([3.0]))
    z = np.array([0.0, 1.0, 1.0, 0.0])
    assert models.grad_z(m, z)[3] == pytest.approx(3.0 - 0.0)


def test_hlr_full_scale():
    assert models.hierarchical_lr(100, 10, seed=0).d_z == 1012


def test_bad_shapes():
    with pytest.raises(ValueError):
        models.log_joint(models.toy_gaussian(2), np.zeros(3))
