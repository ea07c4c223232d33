"""Acceptance criteria 1-11 at their stated tolerances and runtime budgets.

Run ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``;
either way one PASS/FAIL line per criterion is printed.
"""
import filecmp
import subprocess
import sys
import time
import pytest

from qmcvi import acceptance

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = {}


def _report(number, chk, budget):
    within = chk.seconds < budget
    ok = chk.passed and within
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'} | {chk.line()} | {chk.seconds:.1f}s (budget {budget:g}s)"
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert chk.passed, chk.line()
    assert within, f"took {chk.seconds:.1f}s, budget {budget}s"


def test_criterion_01_sequence_correctness():
    _report(1, acceptance.check_sequence(64), 1.0)


def test_criterion_02_integration_rates():
    _report(2, acceptance.check_integration_rates(100), 30.0)


def test_criterion_03_unbiasedness():
    _report(3, acceptance.check_unbiasedness(500, n=10), 10.0)


def test_criterion_04_variance_separation():
    _report(4, acceptance.check_variance_separation(), 30.0)


@pytest.mark.slow
def test_criterion_05_fixed_step_plateau():
    _report(5, acceptance.check_plateau(seeds=20, iters=2000, alpha=0.05, n=64), 60.0)


@pytest.mark.slow
def test_criterion_06_increasing_sample_size():
    _report(6, acceptance.check_increasing_samples(iters=10_000, alpha=0.001, n_final=50_000), 300.0)


@pytest.mark.slow
def test_criterion_07_sample_efficiency():
    _report(7, acceptance.check_sample_efficiency(adam_steps=200, resamples=1000), 120.0)


def test_criterion_08_model_gradients():
    _report(8, acceptance.check_model_gradients(50), 10.0)


def test_criterion_09_inverse_cdf():
    _report(9, acceptance.check_inverse_cdf(10_000), 1.0)


@pytest.mark.slow
def test_criterion_10_poisson_end_to_end():
    _report(10, acceptance.check_poisson_end_to_end(seeds=5, n=50, alpha=0.1), 300.0)


def test_criterion_11_selftest_reproducible(tmp_path):
    start = time.perf_counter()
    dirs = [tmp_path / "a", tmp_path / "b"]
    codes = [subprocess.run([sys.executable, "-m", "qmcvi.cli", "selftest", "--out", str(d), "--seed", "5"],
                            capture_output=True, text=True).returncode for d in dirs]
    names = sorted(p.name for p in dirs[0].glob("*.csv"))
    same = bool(names) and all(filecmp.cmp(dirs[0] / n, dirs[1] / n, shallow=False) for n in names)
    chk = acceptance.Check("selftest byte-identical CSVs", same and codes == [0, 0], float(same),
                           "identical bytes across two runs, exit 0",
                           f"files={','.join(names)} exit={codes}")
    chk.seconds = time.perf_counter() - start
    _report(11, chk, 120.0)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
