"""Acceptance criteria for the whole package, runnable as one suite.

Each criterion is a self-contained check with an explicit pass condition and,
where stated, a runtime limit. The CLI `verify` subcommand prints one line
per criterion; the test suite asserts each one individually. All randomness
is seeded, so the suite is deterministic.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from ._util import make_rng, mix_seed
from . import paillier
from .harness import (
    ExperimentConfig,
    monte_carlo,
    prepare,
    sweep_n_rows,
    trial_csv_text,
)
from .mechanisms import (
    GaussianMechanism,
    PrivacyBudget,
    TruncatedLaplaceMechanism,
    calibrate_shuffle_consensus,
    gaussian_mechanism_delta,
    gaussian_mechanism_snr,
    trunc_laplace_cdf,
    trunc_laplace_sample,
    trunc_laplace_variance,
    worst_case_delta,
)
from .problem import exact_solution, sym_dim, sym_to_vec, vec_to_sym
from .solvers import (
    gt_error_bound,
    solve_gradient_tracking,
    solve_noisy_consensus,
    solve_shuffle_consensus,
)

BASE_SEED = 20260816

# Stock experiment parameters: n=10 three-dimensional agents on a 0.3-cycle,
# budget mu=3, eps=10, delta=0.2, truncation bound 3.1, step 0.005, margin
# g=0.01. That delta sits below the bounded mechanism's admissible floor, so
# runs at these values require validate=False.
def stock_config(**overrides) -> ExperimentConfig:
    base = ExperimentConfig(seed=BASE_SEED, validate=False)
    return replace(base, **overrides)


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} ({self.seconds:.1f}s): {self.detail}"


def _crit_vectorization_bijection() -> tuple[bool, str]:
    """Exact round trip of the symmetric-matrix packing, m in 1..6; < 1 s."""
    start = time.perf_counter()
    rng = make_rng(mix_seed(BASE_SEED, 1))
    checks = 0
    for m in range(1, 7):
        for _ in range(50):
            raw = rng.uniform(-5.0, 5.0, size=(m, m))
            mat = raw + raw.T  # exactly symmetric by construction
            vec = sym_to_vec(mat)
            if not np.array_equal(vec_to_sym(vec), mat):
                return False, f"matrix round trip broke at m={m}"
            v = rng.uniform(-5.0, 5.0, size=sym_dim(m))
            if not np.array_equal(sym_to_vec(vec_to_sym(v)), v):
                return False, f"vector round trip broke at m={m}"
            checks += 1
    elapsed = time.perf_counter() - start
    if elapsed >= 1.0:
        return False, f"runtime {elapsed:.2f}s exceeds the 1s limit"
    return True, f"{checks} exact round trips across m=1..6 in {elapsed:.2f}s"


def _crit_gaussian_tradeoff() -> tuple[bool, str]:
    """Trade-off inverse consistency on a 5x5 grid; numeric audit of sigma."""
    eps_grid = (0.1, 0.5, 1.0, 3.0, 10.0)
    delta_grid = (0.01, 0.05, 0.1, 0.2, 0.36)
    worst = 0.0
    for eps in eps_grid:
        for delta in delta_grid:
            snr = gaussian_mechanism_snr(eps, delta)
            worst = max(worst, abs(gaussian_mechanism_delta(eps, snr) - delta))
    if worst > 1e-10:
        return False, f"round-trip error {worst:.3e} exceeds 1e-10"

    audit_worst = 0.0
    for eps, delta, mu in ((1.0, 0.05, 1.0), (10.0, 0.2, 3.0)):
        budget = PrivacyBudget(epsilon=eps, delta=delta, mu=mu)
        sigma = mu / gaussian_mechanism_snr(eps, delta)
        delta_hat = worst_case_delta(GaussianMechanism(sigma=sigma), budget)
        audit_worst = max(audit_worst, abs(delta_hat - delta))
    if audit_worst > 1e-6:
        return False, f"numeric audit gap {audit_worst:.3e} exceeds 1e-6"
    return True, (
        f"grid round-trip error {worst:.1e}, numeric delta audit gap "
        f"{audit_worst:.1e}"
    )


def _crit_truncated_laplace() -> tuple[bool, str]:
    """Support, variance, KS fit, and a numeric privacy audit; < 30 s."""
    start = time.perf_counter()
    mu, eps = 3.0, 10.0
    bound = mu / 0.9  # feasible ratio: delta floor ~0.165 < 0.36 < 1/2
    delta = 0.36
    rng = make_rng(mix_seed(BASE_SEED, 2))
    samples = trunc_laplace_sample(mu, eps, bound, rng, size=1_000_000)

    violations = int(np.sum((samples < -bound) | (samples > bound)))
    if violations:
        return False, f"{violations} samples left the support"

    var_exact = trunc_laplace_variance(mu, eps, bound)
    var_emp = float(np.var(samples))
    var_err = abs(var_emp - var_exact) / var_exact
    if var_err > 0.02:
        return False, f"variance off by {var_err:.1%} (limit 2%)"

    sorted_samples = np.sort(samples)
    cdf_vals = trunc_laplace_cdf(sorted_samples, mu, eps, bound)
    k = len(samples)
    grid_hi = np.arange(1, k + 1) / k
    grid_lo = np.arange(0, k) / k
    ks = float(np.max(np.maximum(np.abs(cdf_vals - grid_hi), np.abs(cdf_vals - grid_lo))))
    if ks > 0.002:
        return False, f"KS statistic {ks:.4f} exceeds 0.002"

    budget = PrivacyBudget(epsilon=eps, delta=delta, mu=mu)
    mech = TruncatedLaplaceMechanism(mu=mu, epsilon=eps, bound=bound)
    delta_hat = worst_case_delta(mech, budget)
    if delta_hat > delta + 1e-9:
        return False, f"numeric audit delta {delta_hat:.4f} exceeds target {delta}"

    elapsed = time.perf_counter() - start
    if elapsed >= 30.0:
        return False, f"runtime {elapsed:.1f}s exceeds the 30s limit"
    return True, (
        f"1e6 samples in support, variance err {var_err:.2%}, KS {ks:.4f}, "
        f"audit delta {delta_hat:.4f} <= {delta} in {elapsed:.1f}s"
    )


def _crit_paillier() -> tuple[bool, str]:
    """Exhaustive small-plaintext homomorphism plus full-size round trips; < 60 s."""
    start = time.perf_counter()
    rng = make_rng(mix_seed(BASE_SEED, 3))
    pk, sk = paillier.keygen(256, rng)
    cts = [paillier.encrypt(pk, v, rng) for v in range(51)]
    for a in range(51):
        for b in range(51):
            got = paillier.decrypt(sk, paillier.hom_add(cts[a], cts[b]))
            if got != a + b:
                return False, f"hom_add({a},{b}) decrypted to {got}"
            got = paillier.decrypt(sk, paillier.hom_scale(cts[a], b))
            if got != a * b:
                return False, f"hom_scale({a},{b}) decrypted to {got}"

    pk_big, sk_big = paillier.keygen(paillier.DEFAULT_KEY_BITS, rng)
    for i in range(1000):
        m = int(rng.integers(0, 1 << 62)) | (int(rng.integers(0, 1 << 62)) << 62)
        m %= pk_big.n
        if paillier.decrypt(sk_big, paillier.encrypt(pk_big, m, rng)) != m:
            return False, f"full-size round trip {i} failed"

    elapsed = time.perf_counter() - start
    if elapsed >= 60.0:
        return False, f"runtime {elapsed:.1f}s exceeds the 60s limit"
    return True, (
        f"2601 exhaustive add/scale pairs plus 1000 {paillier.DEFAULT_KEY_BITS}-bit "
        f"round trips, all exact, in {elapsed:.1f}s"
    )


def _crit_shuffle_zero_sum() -> tuple[bool, str]:
    """100 protocol runs: exact integer cancellation and oracle agreement."""
    from .graph import build_cycle
    from .shuffle import plaintext_shuffle_oracle, run_shuffle

    rng = make_rng(mix_seed(BASE_SEED, 4))
    dim = sym_dim(3) + 3
    worst_decoded = 0.0
    runs = 0
    for rep in range(100):
        n = 3 if rep % 2 == 0 else 10
        net = build_cycle(n, 0.3)
        thetas = rng.uniform(-0.1, 0.1, size=(n, dim))
        res = run_shuffle(net, thetas, sigma_eta=0.02, a_max=100, rng=rng, key_bits=256)
        col_sums = [sum(row[j] for row in res.mask_int) for j in range(dim)]
        if any(v != 0 for v in col_sums):
            return False, f"integer mask sum nonzero on run {rep}: {col_sums}"
        decoded = float(np.max(np.abs(res.masks.sum(axis=0))))
        worst_decoded = max(worst_decoded, decoded)
        if decoded > n * 2.0 / res.scale:
            return False, (
                f"decoded mask sum {decoded:.3e} exceeds n*2/scale on run {rep}"
            )
        oracle = plaintext_shuffle_oracle(net, res.theta_bar, res.scalars, scale=res.scale)
        if oracle != res.mask_int:
            return False, f"encrypted masks diverge from the plaintext oracle on run {rep}"
        runs += 1
    return True, (
        f"{runs} runs (n alternating 3/10): integer sums exactly zero, decoded "
        f"sums <= {worst_decoded:.1e}, oracle matches bit for bit"
    )


def _crit_noise_off() -> tuple[bool, str]:
    """All three solvers recover the exact solution with noise disabled."""
    from .graph import build_cycle
    from .problem import random_problem

    worst = 0.0
    for rep in range(20):
        rng = make_rng(mix_seed(BASE_SEED, 500 + rep))
        prob = random_problem(10, 3, rng, quad_amp=15.0, linear_amp=15.0)
        net = build_cycle(10, 0.3)
        x_star = exact_solution(prob)

        out_gt = solve_gradient_tracking(prob, net, None, beta=0.005,
                                         rounds=4000, noise_off=True)
        budget = PrivacyBudget(epsilon=10.0, delta=0.2, mu=3.0)
        calib = calibrate_shuffle_consensus(budget, n=10, a_max=100, noise_margin=0.01)
        out_sh = solve_shuffle_consensus(prob, net, calib, rounds=500,
                                         rng=rng, noise_off=True, key_bits=256)
        out_bl = solve_noisy_consensus(prob, net, None, rounds=500, noise_off=True)
        for tag, out in (("gt", out_gt), ("shuffle", out_sh), ("baseline", out_bl)):
            err = float(np.linalg.norm(out.x_hat - x_star))
            agent_err = float(np.max(np.linalg.norm(out.x_agents - x_star, axis=1)))
            worst = max(worst, err, agent_err)
            if err > 1e-8 or agent_err > 1e-8:
                return False, f"{tag} missed x* by {max(err, agent_err):.2e} on rep {rep}"
    return True, f"20 instances, three solvers, worst deviation {worst:.1e} <= 1e-8"


def _log_linear_r2(rounds: np.ndarray, values: np.ndarray) -> float:
    y = np.log10(values)
    coef = np.polyfit(rounds, y, 1)
    fit = np.polyval(coef, rounds)
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def _crit_gt_convergence() -> tuple[bool, str]:
    """Stock-parameter trajectory: geometric decay to the perturbed optimum.

    The per-round distance to the run's own limit point must fall at least
    six orders of magnitude with a log-linear fit of R^2 >= 0.95, and the
    error against the noise-free solution must flatten exactly at the limit
    point's offset. Under 10 s per trial.
    """
    config = stock_config(solver="gt")
    setup = prepare(config)
    details = []
    for rep in range(3):
        rng = make_rng(mix_seed(config.seed, rep))
        start = time.perf_counter()
        out = solve_gradient_tracking(
            setup.problem, setup.net, setup.gt_calib, config.beta,
            rounds=setup.rounds, rng=rng, record_trajectory=True,
        )
        elapsed = time.perf_counter() - start
        if elapsed >= 10.0:
            return False, f"trial {rep} took {elapsed:.1f}s (limit 10s)"
        if out.fixed_point is None:
            return False, f"trial {rep}: perturbed system unexpectedly singular"

        fix = np.asarray(out.trajectory_fixed_point)
        sol = np.asarray(out.trajectory_solution)
        drop = fix[0] / max(fix[-1], 1e-300)
        if drop < 1e6:
            return False, f"trial {rep}: decay only {math.log10(drop):.1f} orders"

        # Fit on the geometric phase: everything still above 1e4 times the
        # terminal value, skipping the first few mixing rounds.
        idx = np.where(fix > fix[-1] * 1e4)[0]
        idx = idx[idx >= 5]
        r2 = _log_linear_r2(idx.astype(float), fix[idx])
        if r2 < 0.95:
            return False, f"trial {rep}: log-linear fit R^2={r2:.3f} < 0.95"

        floor_sq = float(np.mean(np.sum((out.fixed_point - setup.x_star) ** 2)))
        tail = sol[-max(3, len(sol) // 20):]
        flat = float(np.max(tail) - np.min(tail)) / max(float(np.mean(tail)), 1e-300)
        if abs(sol[-1] - floor_sq) > 1e-3 * floor_sq:
            return False, (
                f"trial {rep}: plateau {sol[-1]:.3e} differs from the limit "
                f"offset {floor_sq:.3e}"
            )
        if flat > 1e-3:
            return False, f"trial {rep}: plateau still moving ({flat:.2e} relative)"
        details.append(
            f"rep{rep}: {math.log10(drop):.0f} orders, R^2={r2:.3f}, "
            f"plateau {sol[-1]:.2e} in {elapsed:.1f}s"
        )
    return True, "; ".join(details)


def _crit_gt_error_bound() -> tuple[bool, str]:
    """Mean limit-point error within the a priori bound; moment identities.

    200 seeded noise draws at stock parameters feed the closed-form limit
    point; their mean square error must sit below the bound. The aggregate
    noise second moments are then checked against n m^2 sigma_gamma^2 and
    n m sigma_eta^2 within 5% at 1e4 draws. Under 5 minutes.
    """
    start = time.perf_counter()
    config = stock_config(solver="gt")
    setup = prepare(config)
    calib = setup.gt_calib
    prob = setup.problem
    n, m = prob.n, prob.m
    k = sym_dim(m)
    x_star = setup.x_star
    bound = gt_error_bound(prob, calib)

    errs = []
    for rep in range(200):
        rng = make_rng(mix_seed(config.seed, 1000 + rep))
        gamma = trunc_laplace_sample(
            calib.budget.mu, calib.budget.epsilon, calib.trunc_bound, rng, size=(n, k)
        )
        eta = rng.normal(0.0, calib.sigma_eta, size=(n, m))
        a_hat = prob.quad_total + vec_to_sym(gamma.sum(axis=0))
        b_hat = prob.linear_total + eta.sum(axis=0)
        x_inf = np.linalg.solve(a_hat, -b_hat)
        errs.append(float(np.sum((x_inf - x_star) ** 2)))
    mean_err = float(np.mean(errs))
    if mean_err > bound:
        return False, f"mean limit error {mean_err:.3e} exceeds bound {bound:.3e}"

    rng = make_rng(mix_seed(config.seed, 999))
    trials = 10_000
    gamma = trunc_laplace_sample(
        calib.budget.mu, calib.budget.epsilon, calib.trunc_bound, rng,
        size=(trials, n, k),
    )
    eta = rng.normal(0.0, calib.sigma_eta, size=(trials, n, m))
    gsum = gamma.sum(axis=1)
    # Frobenius weight: off-diagonal packed entries appear twice in the matrix.
    weights = np.full(k, 2.0)
    diag_positions = np.cumsum(np.arange(m, 0, -1)) - np.arange(m, 0, -1)
    weights[diag_positions] = 1.0
    hess_sq = (gsum**2 * weights).sum(axis=1)
    lin_sq = (eta.sum(axis=1) ** 2).sum(axis=1)

    hess_expect = n * m**2 * calib.sigma_gamma_sq
    lin_expect = n * m * calib.sigma_eta**2
    hess_gap = abs(float(np.mean(hess_sq)) - hess_expect) / hess_expect
    lin_gap = abs(float(np.mean(lin_sq)) - lin_expect) / lin_expect
    if hess_gap > 0.05:
        return False, f"quadratic-noise moment off by {hess_gap:.1%} (limit 5%)"
    if lin_gap > 0.05:
        return False, f"linear-noise moment off by {lin_gap:.1%} (limit 5%)"

    elapsed = time.perf_counter() - start
    if elapsed >= 300.0:
        return False, f"runtime {elapsed:.0f}s exceeds the 5 min limit"
    return True, (
        f"mean limit error {mean_err:.3e} <= bound {bound:.3e} (200 draws); "
        f"moment gaps {hess_gap:.1%} / {lin_gap:.1%} at 1e4 draws in {elapsed:.0f}s"
    )


def _crit_shuffle_accuracy() -> tuple[bool, str]:
    """1000-trial mean aggregate error within 10% of dim * n * sigma_gamma^2.

    The construction adds one Gaussian of std sigma_gamma per entry per
    agent, so the aggregate's expected square error carries the full
    dimension factor; the flat per-vector statement without that factor is
    recorded here for reference, not asserted. Under 5 minutes.
    """
    start = time.perf_counter()
    config = stock_config(solver="dishuf-ac", trials=1000)
    setup = prepare(config)
    rows, summary = monte_carlo(config)
    if summary["failed"]:
        return False, f"{summary['failed']} of {len(rows)} trials failed"
    theta_errs = [r.theta_err_sq for r in rows]
    mean_err = float(np.mean(theta_errs))
    dim = sym_dim(config.m) + config.m
    predicted = dim * config.n * setup.shuffle_calib.sigma_gamma**2
    flat_reference = config.n * setup.shuffle_calib.sigma_gamma**2
    gap = abs(mean_err - predicted) / predicted
    elapsed = time.perf_counter() - start
    if gap > 0.10:
        return False, f"aggregate error {mean_err:.4f} is {gap:.1%} from {predicted:.4f}"
    if elapsed >= 300.0:
        return False, f"runtime {elapsed:.0f}s exceeds the 5 min limit"
    return True, (
        f"mean aggregate error {mean_err:.4f} within {gap:.1%} of {predicted:.4f}; "
        f"dimensionless reference value {flat_reference:.4f} (ratio {dim}) "
        f"recorded, not asserted; {elapsed:.0f}s"
    )


def _crit_size_sweep_ordering() -> tuple[bool, str]:
    """Median error ordering across network sizes, 100 trials per cell."""
    config = stock_config(trials=100)
    rows = sweep_n_rows(config, (10, 50))

    def median_for(solver: str, n: int) -> float:
        vals = [r.mean_agent_error_sq for r in rows
                if r.solver == solver and r.n == n and not r.failed]
        if not vals:
            return math.nan
        return float(np.median(vals))

    gt10, gt50 = median_for("gt", 10), median_for("gt", 50)
    sh10, sh50 = median_for("dishuf-ac", 10), median_for("dishuf-ac", 50)
    bl10, bl50 = median_for("ac-baseline", 10), median_for("ac-baseline", 50)
    if not gt50 > gt10:
        return False, f"gt median did not grow: {gt10:.3e} -> {gt50:.3e}"
    if not sh50 <= 3.0 * sh10:
        return False, f"dishuf-ac median grew beyond 3x: {sh10:.3e} -> {sh50:.3e}"
    if not (sh10 <= bl10 and sh50 <= bl50):
        return False, (
            f"dishuf-ac not at or below the baseline: "
            f"{sh10:.3e} vs {bl10:.3e} at n=10, {sh50:.3e} vs {bl50:.3e} at n=50"
        )
    return True, (
        f"gt {gt10:.2e}->{gt50:.2e} grows; dishuf-ac {sh10:.2e}->{sh50:.2e} "
        f"within 3x; baseline {bl10:.2e}/{bl50:.2e} above dishuf-ac"
    )


def _crit_csv_determinism() -> tuple[bool, str]:
    """Identical CSV bytes from two independent runs of one config."""
    config = stock_config(solver="dishuf-ac", trials=10)
    rows_a, _ = monte_carlo(config)
    rows_b, _ = monte_carlo(config)
    text_a = trial_csv_text(rows_a)
    text_b = trial_csv_text(rows_b)
    if text_a != text_b:
        return False, "two runs of the same config produced different CSV bytes"
    config_jobs = replace(config, jobs=3)
    rows_c, _ = monte_carlo(config_jobs)
    if trial_csv_text(rows_c) != text_a:
        return False, "worker count changed the CSV bytes"
    return True, f"byte-identical across reruns and worker counts ({len(text_a)} bytes)"


CRITERIA = (
    ("vectorization-bijection", _crit_vectorization_bijection),
    ("gaussian-tradeoff-calibration", _crit_gaussian_tradeoff),
    ("truncated-laplace-mechanism", _crit_truncated_laplace),
    ("paillier-homomorphism", _crit_paillier),
    ("shuffle-zero-sum", _crit_shuffle_zero_sum),
    ("noise-off-equivalence", _crit_noise_off),
    ("gt-convergence-trajectory", _crit_gt_convergence),
    ("gt-error-bound", _crit_gt_error_bound),
    ("shuffle-consensus-accuracy", _crit_shuffle_accuracy),
    ("size-sweep-ordering", _crit_size_sweep_ordering),
    ("csv-determinism", _crit_csv_determinism),
)


def run_one(name: str) -> CriterionResult:
    for crit_name, func in CRITERIA:
        if crit_name == name:
            start = time.perf_counter()
            passed, detail = func()
            return CriterionResult(crit_name, passed, detail, time.perf_counter() - start)
    raise KeyError(f"unknown criterion {name!r}")


def run_all(only: str | None = None) -> list[CriterionResult]:
    results = []
    for name, _ in CRITERIA:
        if only and only not in name:
            continue
        results.append(run_one(name))
    return results
