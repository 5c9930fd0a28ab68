"""Packing, costs, and instance generation."""

import numpy as np
import pytest

from dpls._util import make_rng, mix_seed
from dpls.errors import AssumptionError, ShapeError
from dpls.problem import (
    GENERATOR_SHIFT,
    QuadraticCost,
    build_problem,
    cost_value,
    exact_solution,
    gradient,
    load_problem,
    pack_sensitive,
    random_problem,
    save_problem,
    sensitive_dim,
    sym_dim,
    sym_to_vec,
    unpack_sensitive,
    vec_to_sym,
)

SEED = 1_2025


def test_sym_to_vec_index_formula():
    # Row-major upper-triangle order: entry (p, q), q >= p, lands at
    # position (2m - p + 2)(p - 1)/2 + q - p with 1-based p, q.
    for m in range(1, 7):
        mat = np.zeros((m, m))
        expected = np.zeros(sym_dim(m))
        for p in range(1, m + 1):
            for q in range(p, m + 1):
                val = 100.0 * p + q
                mat[p - 1, q - 1] = val
                mat[q - 1, p - 1] = val
                pos = (2 * m - p + 2) * (p - 1) // 2 + q - p
                expected[pos] = val
        assert np.array_equal(sym_to_vec(mat), expected)


def test_round_trip_exact():
    rng = make_rng(SEED)
    for m in range(1, 7):
        for _ in range(25):
            raw = rng.standard_normal((m, m))
            mat = raw + raw.T
            assert np.array_equal(vec_to_sym(sym_to_vec(mat)), mat)
            vec = rng.standard_normal(sym_dim(m))
            assert np.array_equal(sym_to_vec(vec_to_sym(vec)), vec)


def test_sym_to_vec_rejects_asymmetry():
    mat = np.array([[1.0, 2.0], [2.0 + 1e-12, 1.0]])
    with pytest.raises(ShapeError):
        sym_to_vec(mat)


def test_vec_to_sym_rejects_bad_length():
    with pytest.raises(ShapeError):
        vec_to_sym(np.zeros(5))  # no m solves m(m+1)/2 = 5


def test_dims():
    assert [sym_dim(m) for m in range(1, 5)] == [1, 3, 6, 10]
    assert [sensitive_dim(m) for m in range(1, 5)] == [2, 5, 9, 14]


def test_gradient_matches_finite_differences():
    rng = make_rng(mix_seed(SEED, 1))
    for _ in range(10):
        m = int(rng.integers(1, 5))
        raw = rng.standard_normal((m, m))
        cost = QuadraticCost.from_dense(raw + raw.T, rng.standard_normal(m))
        x = rng.standard_normal(m)
        grad = gradient(cost, x)
        h = 1e-6
        for j in range(m):
            e = np.zeros(m)
            e[j] = h
            fd = (cost_value(cost, x + e) - cost_value(cost, x - e)) / (2 * h)
            assert abs(grad[j] - fd) < 1e-5 * (1 + abs(fd))


def test_pack_unpack_sensitive():
    rng = make_rng(mix_seed(SEED, 2))
    raw = rng.standard_normal((3, 3))
    cost = QuadraticCost.from_dense(raw + raw.T, rng.standard_normal(3))
    theta = pack_sensitive(cost)
    assert theta.shape == (9,)
    a, b = unpack_sensitive(theta, 3)
    assert np.array_equal(a, cost.quad)
    assert np.array_equal(b, cost.linear)


def test_random_problem_is_positive_definite():
    rng = make_rng(mix_seed(SEED, 3))
    for rep in range(5):
        prob = random_problem(6, 3, rng)
        eigs = np.linalg.eigvalsh(prob.quad_total)
        assert eigs[0] > 0
        assert prob.lambda_min == pytest.approx(eigs[0], rel=1e-12)
        # the ridge shift keeps the aggregate spectrum at least this large
        assert eigs[0] >= 6 * GENERATOR_SHIFT * 0.99


def test_exact_solution_solves_the_system():
    rng = make_rng(mix_seed(SEED, 4))
    prob = random_problem(5, 4, rng, quad_amp=2.0, linear_amp=3.0)
    x = exact_solution(prob)
    residual = prob.quad_total @ x + prob.linear_total
    assert np.linalg.norm(residual) < 1e-10 * (1 + np.linalg.norm(prob.linear_total))


def test_build_problem_rejects_indefinite_aggregate():
    m = 2
    bad = QuadraticCost.from_dense(np.diag([1.0, -2.0]), np.zeros(m))
    ok = QuadraticCost.from_dense(np.diag([1.0, 1.0]), np.zeros(m))
    with pytest.raises(AssumptionError):
        build_problem([bad, ok])


def test_problem_file_round_trip(tmp_path):
    rng = make_rng(mix_seed(SEED, 5))
    prob = random_problem(4, 3, rng, quad_amp=7.0, linear_amp=0.5)
    path = tmp_path / "instance.txt"
    save_problem(str(path), prob.costs)
    back = load_problem(str(path))
    assert back.n == prob.n and back.m == prob.m
    assert back.lambda_min == pytest.approx(prob.lambda_min, rel=1e-12)
    for c0, c1 in zip(prob.costs, back.costs):
        assert np.array_equal(c0.quad, c1.quad)
        assert np.array_equal(c0.linear, c1.linear)
