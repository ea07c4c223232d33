import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qmcvi import lds
from qmcvi.acceptance import reference_sobol
from qmcvi.lds import SequenceKind, SequenceSource, UniformBatch


def test_first_dimension_prefix():
    pts = lds.sobol(8, 1).points[:, 0]
    assert pts.tolist() == [0.0, 0.5, 0.75, 0.25, 0.375, 0.875, 0.625, 0.125]


def test_matches_reference_generator():
    np.testing.assert_array_equal(lds.sobol(256, 8).points, reference_sobol(256, 8))


@pytest.mark.filterwarnings("ignore:The balance properties")
def test_matches_scipy_unscrambled():
    qmc = pytest.importorskip("scipy.stats.qmc")
    ours = lds.sobol(512, 40, skip=37).points
    ref = qmc.Sobol(40, scramble=False).random(37 + 512)[37:]
    np.testing.assert_array_equal(ours, ref)


@given(st.integers(0, 300), st.integers(1, 100), st.integers(1, 6))
def test_skip_is_prefix_consistent(skip, n, d):
    full = lds.sobol(skip + n, d).points
    np.testing.assert_array_equal(lds.sobol(n, d, skip=skip).points, full[skip:])


def _is_net(points, m, t=0):
    """Brute-force (t, m, 2)-net check: every elementary box of volume
    2^(t-m) holds exactly 2^t points."""
    n = 2 ** m
    ints = np.floor(points * n).astype(np.int64)
    for a in range(m - t + 1):
        b = m - t - a
        cells = (ints[:, 0] >> (m - a)) * (1 << b) + (ints[:, 1] >> (m - b))
        if not np.all(np.bincount(cells, minlength=1 << (m - t)) == 2 ** t):
            return False
    return True


@pytest.mark.parametrize("mode", ["rqmc-shift", "rqmc-scramble"])
@given(m=st.integers(1, 9), seed=st.integers(0, 2 ** 64 - 1))
def test_first_two_dims_form_a_zero_net(mode, m, seed):
    # dims 1-2 of Sobol' are a (0, m, 2)-net; digital shifts and scrambles keep that
    batch = lds.generate(SequenceSource(mode, 2, seed), 2 ** m)
    assert _is_net(batch.points, m)


def test_unrandomized_is_a_net():
    for m in range(1, 11):
        assert _is_net(lds.sobol(2 ** m, 2).points, m)


@given(seed=st.integers(0, 2 ** 64 - 1), d=st.integers(1, 20))
def test_randomized_points_in_unit_cube(seed, d):
    for kind in ("mc", "rqmc-shift", "rqmc-scramble"):
        p = lds.generate(SequenceSource(kind, d, seed), 100).points
        assert p.shape == (100, d) and p.min() >= 0.0 and p.max() < 1.0


def test_determinism_and_seed_sensitivity():
    for kind in ("mc", "rqmc-shift", "rqmc-scramble"):
        a = lds.generate(SequenceSource(kind, 5, 11), 64).points
        b = lds.generate(SequenceSource(kind, 5, 11), 64).points
        c = lds.generate(SequenceSource(kind, 5, 12), 64).points
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)


def test_mc_skip_continues_stream():
    full = lds.generate(SequenceSource("mc", 3, 5), 50).points
    tail = lds.generate(SequenceSource("mc", 3, 5, skip=13), 37).points
    np.testing.assert_array_equal(tail, full[13:])


@pytest.mark.parametrize("mode", ["shift", "scramble"])
def test_randomize_equals_generate(mode):
    base = lds.sobol(128, 6)
    direct = lds.generate(SequenceSource("rqmc-" + mode, 6, 99), 128).points
    np.testing.assert_array_equal(lds.randomize(base, mode, 99).points, direct)


def test_randomized_marginals_uniform():
    for kind in ("rqmc-shift", "rqmc-scramble"):
        means = [lds.generate(SequenceSource(kind, 3, s), 4).points.mean(axis=0) for s in range(400)]
        # each randomized point is U[0,1)
        assert abs(np.mean(means) - 0.5) < 0.02


def test_invalid_requests():
    with pytest.raises(lds.UnsupportedDimensionError):
        SequenceSource("qmc", 0)
    with pytest.raises(lds.UnsupportedDimensionError):
        lds.generate(SequenceSource("qmc", lds.default_table().max_dim + 1), 4)
    with pytest.raises(lds.EmptyRequestError):
        lds.generate(SequenceSource("qmc", 2), 0)
    with pytest.raises(ValueError):
        SequenceSource("halton", 2)
    with pytest.raises(ValueError):
        UniformBatch(np.array([[1.0]]))


def test_direction_table_rejects_bad_entries():
    with pytest.raises(ValueError):
        lds.DirectionTable.from_lines(["d s a m_i", "2 1 0 2"])
    with pytest.raises(ValueError):
        lds.DirectionTable.from_lines(["d s a m_i", "2 2 0 1 5"])


def _brute_star_discrepancy(points):
    n = len(points)
    grid = [np.unique(np.r_[points[:, j], 1.0]) for j in range(2)]
    best = 0.0
    for a, b in itertools.product(*grid):
        closed = np.sum((points[:, 0] <= a) & (points[:, 1] <= b)) / n
        opened = np.sum((points[:, 0] < a) & (points[:, 1] < b)) / n
        best = max(best, closed - a * b, a * b - opened)
    return best


def test_star_discrepancy_single_point():
    assert lds.star_discrepancy_2d(UniformBatch(np.array([[0.5, 0.5]]))) == pytest.approx(0.75)


@given(st.lists(st.tuples(st.floats(0, 0.999), st.floats(0, 0.999)), min_size=1, max_size=25))
def test_star_discrepancy_matches_brute_force(pts):
    p = np.array(pts)
    assert lds.star_discrepancy_2d(UniformBatch(p)) == pytest.approx(_brute_star_discrepancy(p), abs=1e-12)


def test_sobol_beats_mc_discrepancy():
    qmc = lds.star_discrepancy_2d(lds.sobol(256, 2))
    mc = np.median([lds.star_discrepancy_2d(lds.generate(SequenceSource("mc", 2, s), 256))
                    for s in range(20)])
    assert qmc < mc


def test_kind_flags():
    assert not SequenceKind.MC.randomized and not SequenceKind.QMC.randomized
    assert SequenceKind("rqmc-scramble").randomized
