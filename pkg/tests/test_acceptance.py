"""Acceptance criteria, one test per criterion.

Each test runs the same check `dpls verify` runs and prints its pass/fail
line, so a red test here names the exact claim that broke and by how much.
The heavy statistical criteria dominate the suite's runtime; run just this
file when iterating on solver internals.
"""

import pytest

from dpls import acceptance

CRITERION_NAMES = [name for name, _ in acceptance.CRITERIA]


def run_criterion(name):
    result = acceptance.run_one(name)
    print(result.line())
    assert result.passed, result.detail
    return result


def test_criteria_registry_is_complete():
    assert len(CRITERION_NAMES) == 11
    assert len(set(CRITERION_NAMES)) == 11


def test_vectorization_bijection():
    run_criterion("vectorization-bijection")


def test_gaussian_tradeoff_calibration():
    run_criterion("gaussian-tradeoff-calibration")


def test_truncated_laplace_mechanism():
    run_criterion("truncated-laplace-mechanism")


def test_paillier_homomorphism():
    run_criterion("paillier-homomorphism")


def test_shuffle_zero_sum():
    run_criterion("shuffle-zero-sum")


def test_noise_off_equivalence():
    run_criterion("noise-off-equivalence")


def test_gt_convergence_trajectory():
    run_criterion("gt-convergence-trajectory")


def test_gt_error_bound():
    run_criterion("gt-error-bound")


def test_shuffle_consensus_accuracy():
    run_criterion("shuffle-consensus-accuracy")


def test_size_sweep_ordering():
    run_criterion("size-sweep-ordering")


def test_csv_determinism():
    run_criterion("csv-determinism")


def test_unknown_criterion_is_rejected():
    with pytest.raises(KeyError):
        acceptance.run_one("no-such-criterion")
