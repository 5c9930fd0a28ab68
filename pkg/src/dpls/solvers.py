"""Distributed solvers for the private least-squares problem.

Two private algorithms plus a naive baseline:

* gradient tracking with perturbed oracles: each agent injects truncated
  Laplace noise into its packed quadratic block and Gaussian noise into its
  linear block once, then the network runs a tracked first-order iteration
  that converges geometrically to the minimizer of the perturbed aggregate.
* shuffle-then-consensus: agents mask their noisy sensitive vectors with
  encrypted zero-sum offsets, average the masked vectors by linear consensus,
  rescale, and each locally solves the recovered aggregate system.
* noisy consensus baseline: same pipeline without masks, with per-entry
  Gaussian noise calibrated for a single agent's full view.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CalibrationError,
    ConvergenceError,
    DivergenceError,
    ShapeError,
    SingularError,
)
from .graph import Network
from .mechanisms import (
    GTCalibration,
    PrivacyBudget,
    ShuffleCalibration,
    gaussian_mechanism_snr,
    trunc_laplace_sample,
)
from .problem import (
    GlobalProblem,
    exact_solution,
    pack_sensitive,
    sym_dim,
    unpack_sensitive,
    vec_to_sym,
)
from .shuffle import run_shuffle

DEFAULT_GT_ROUNDS = 2000
DEFAULT_CONSENSUS_ROUNDS = 500
DEFAULT_SIM_KEY_BITS = 256
# Applied Gaussian mask-noise std is capped here. The calibrated value grows
# beyond any float range with n, but masked noise cancels exactly in the
# aggregate, so accuracy of the recovered solution is unaffected by the cap;
# a moderate cap keeps the consensus dynamic range small.
DEFAULT_ETA_CAP = 1e6

COND_LIMIT = 1e12


@dataclass
class SolveOutcome:
    """Result of one solver run.

    x_hat is the solution recovered from the network-wide aggregate; x_agents
    stacks each agent's local solution. trajectory, when recorded, holds per
    round mean square errors: err_solution against the noise-free minimizer
    and err_fixed_point against the run's own limit point (the minimizer of
    the perturbed system for gradient tracking).
    """

    x_hat: np.ndarray
    a_hat: np.ndarray
    b_hat: np.ndarray
    iterations: int
    x_agents: np.ndarray
    trajectory_rounds: list[int] = field(default_factory=list)
    trajectory_solution: list[float] = field(default_factory=list)
    trajectory_fixed_point: list[float] = field(default_factory=list)
    # gradient tracking extras
    hessian_noise: np.ndarray | None = None
    linear_noise: np.ndarray | None = None
    fixed_point: np.ndarray | None = None
    perturbed_pd: bool | None = None
    tracking_violation: float | None = None
    # consensus extras
    theta_hat: np.ndarray | None = None
    disagreement: float | None = None
    retried: bool = False


def _solve_system(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a x = -b, raising SingularError on ill-conditioned systems."""
    if not np.all(np.isfinite(a)) or np.linalg.cond(a) > COND_LIMIT:
        raise SingularError("recovered quadratic block is singular or near singular")
    try:
        return np.linalg.solve(a, -b)
    except np.linalg.LinAlgError as exc:
        raise SingularError("recovered quadratic block is singular") from exc


def solve_gradient_tracking(
    problem: GlobalProblem,
    net: Network,
    calib: GTCalibration | None,
    beta: float,
    rounds: int = DEFAULT_GT_ROUNDS,
    rng: np.random.Generator | None = None,
    noise_off: bool = False,
    record_trajectory: bool = False,
    early_stop: float = 1e-14,
) -> SolveOutcome:
    """Run the noise-perturbed gradient tracking iteration.

    Each agent perturbs its quadratic block once with truncated Laplace noise
    and its linear block once with Gaussian noise, then the network iterates

        x(t+1) = W x(t) - beta s(t)
        s(t+1) = W s(t) + G (x(t+1) - x(t))

    from x(0) = 0, s(0) = perturbed gradients at 0. With noise_off=True the
    perturbations are zero and calib may be None. Raises DivergenceError when
    the iterate error grows by six orders of magnitude, which indicates an
    unstable step size.
    """
    if net.n != problem.n:
        raise ShapeError(f"network has {net.n} agents, problem has {problem.n}")
    if not noise_off and calib is None:
        raise CalibrationError("calibration is required unless noise_off=True")
    if beta <= 0:
        raise ShapeError(f"step size must be positive, got {beta}")
    n, m = problem.n, problem.m
    k = sym_dim(m)
    if noise_off:
        gamma = np.zeros((n, k))
        eta = np.zeros((n, m))
    else:
        if rng is None:
            raise ShapeError("rng is required when noise is enabled")
        gamma = trunc_laplace_sample(
            calib.budget.mu, calib.budget.epsilon, calib.trunc_bound, rng, size=(n, k)
        )
        eta = rng.normal(0.0, calib.sigma_eta, size=(n, m))

    quads = np.stack([c.quad for c in problem.costs])
    linears = np.stack([c.linear for c in problem.costs])
    g_mats = quads + np.stack([vec_to_sym(gamma[i]) for i in range(n)])
    h_vecs = linears + eta

    hessian_noise = vec_to_sym(gamma.sum(axis=0))
    linear_noise = eta.sum(axis=0)
    a_hat = problem.quad_total + hessian_noise
    b_hat = problem.linear_total + linear_noise

    eigs = np.linalg.eigvalsh(a_hat)
    perturbed_pd = bool(eigs[0] > 0)
    fixed_point = None
    if np.linalg.cond(a_hat) < COND_LIMIT:
        fixed_point = np.linalg.solve(a_hat, -b_hat)

    x_star = exact_solution(problem)
    w = net.mixing

    x = np.zeros((n, m))
    s = h_vecs.copy()
    rhs_const = h_vecs.sum(axis=0)

    err0 = float(np.mean(np.sum((x - x_star) ** 2, axis=1)))
    tracking_violation = 0.0
    traj_rounds: list[int] = []
    traj_sol: list[float] = []
    traj_fix: list[float] = []

    def record(t: int, xs: np.ndarray) -> None:
        if not record_trajectory:
            return
        traj_rounds.append(t)
        traj_sol.append(float(np.mean(np.sum((xs - x_star) ** 2, axis=1))))
        if fixed_point is not None:
            traj_fix.append(float(np.mean(np.sum((xs - fixed_point) ** 2, axis=1))))

    record(0, x)
    iterations = 0
    for t in range(1, rounds + 1):
        x_new = w @ x - beta * s
        s_new = w @ s + np.einsum("nij,nj->ni", g_mats, x_new - x)
        lhs = s_new.sum(axis=0)
        rhs = np.einsum("nij,nj->ni", g_mats, x_new).sum(axis=0) + rhs_const
        viol = float(np.linalg.norm(lhs - rhs) / (1.0 + np.linalg.norm(rhs)))
        tracking_violation = max(tracking_violation, viol)

        err = float(np.mean(np.sum((x_new - x_star) ** 2, axis=1)))
        if not math.isfinite(err) or err > 1e6 * (err0 + 1.0):
            raise DivergenceError(
                "gradient tracking iterates diverged; use a smaller step size"
            )
        record(t, x_new)
        delta = max(
            float(np.max(np.abs(x_new - x))), float(np.max(np.abs(s_new - s)))
        )
        x, s = x_new, s_new
        iterations = t
        if delta <= early_stop * (1.0 + float(np.max(np.abs(x)))):
            break

    return SolveOutcome(
        x_hat=x.mean(axis=0),
        a_hat=a_hat,
        b_hat=b_hat,
        iterations=iterations,
        x_agents=x,
        trajectory_rounds=traj_rounds,
        trajectory_solution=traj_sol,
        trajectory_fixed_point=traj_fix,
        hessian_noise=hessian_noise,
        linear_noise=linear_noise,
        fixed_point=fixed_point,
        perturbed_pd=perturbed_pd,
        tracking_violation=tracking_violation,
    )


def gt_error_bound(problem: GlobalProblem, calib: GTCalibration) -> float:
    """A priori mean square error bound for the gradient tracking solution.

    2 (n m^2 sigma_gamma^2 ||x*||^2 + n m sigma_eta^2) / ((1 - f)^2 lambda^2)
    with f the truncation fraction and lambda the aggregate's smallest
    eigenvalue. Requires f < 1, otherwise the perturbed system can lose
    positive definiteness and no finite bound holds.
    """
    if calib.trunc_fraction >= 1.0:
        raise CalibrationError(
            f"bound requires a truncation fraction below 1, got {calib.trunc_fraction:.6g}"
        )
    n, m = problem.n, problem.m
    x_star = exact_solution(problem)
    num = 2.0 * (
        n * m**2 * calib.sigma_gamma_sq * float(x_star @ x_star)
        + n * m * calib.sigma_eta**2
    )
    den = (1.0 - calib.trunc_fraction) ** 2 * problem.lambda_min**2
    return num / den


def average_consensus(
    net: Network,
    y0: np.ndarray,
    rounds: int,
    early_stop: float | None = None,
) -> tuple[np.ndarray, int]:
    """Iterate y <- (I - L) y, preserving the column sums exactly in theory.

    Stops early once the largest per-entry change drops to early_stop (an
    absolute threshold) or the state freezes entirely.
    """
    y = np.asarray(y0, dtype=float).copy()
    if y.shape[0] != net.n:
        raise ShapeError(f"state has {y.shape[0]} rows, network has {net.n}")
    w = net.mixing
    iterations = 0
    thresh = 0.0 if early_stop is None else early_stop
    for t in range(1, rounds + 1):
        y_new = w @ y
        delta = float(np.max(np.abs(y_new - y)))
        y = y_new
        iterations = t
        if delta <= thresh:
            break
    return y, iterations


def _consensus_recover(
    problem: GlobalProblem,
    net: Network,
    y0: np.ndarray,
    rounds: int,
    data_scale: float,
) -> SolveOutcome:
    """Shared tail of both consensus pipelines: average, rescale, split, solve."""
    n, m = problem.n, problem.m
    early = 1e-14 * (1.0 + float(np.max(np.abs(y0))))
    y, iterations = average_consensus(net, y0, rounds, early_stop=early)

    center = y.mean(axis=0)
    disagreement = float(np.max(np.abs(y - center)))
    if disagreement > 1e-2 * (1.0 + data_scale):
        raise ConvergenceError(
            f"consensus disagreement {disagreement:.3g} after {iterations} rounds; "
            "increase the round budget"
        )

    theta_hat = n * y
    k = sym_dim(m)
    mean_a, mean_b = unpack_sensitive(n * center, m)
    x_agents = np.empty((n, m))
    for i in range(n):
        a_i = vec_to_sym(theta_hat[i, :k])
        b_i = theta_hat[i, k:]
        x_agents[i] = _solve_system(a_i, b_i)
    x_hat = _solve_system(mean_a, mean_b)

    return SolveOutcome(
        x_hat=x_hat,
        a_hat=mean_a,
        b_hat=mean_b,
        iterations=iterations,
        x_agents=x_agents,
        theta_hat=n * center,
        disagreement=disagreement,
    )


def solve_shuffle_consensus(
    problem: GlobalProblem,
    net: Network,
    calib: ShuffleCalibration,
    rounds: int = DEFAULT_CONSENSUS_ROUNDS,
    rng: np.random.Generator | None = None,
    noise_off: bool = False,
    key_bits: int = DEFAULT_SIM_KEY_BITS,
    eta_cap: float | None = DEFAULT_ETA_CAP,
) -> SolveOutcome:
    """Mask, average, rescale, and locally solve the recovered system.

    Initial states are theta_i + mask_i * mask_scale + gamma_i; consensus
    averages them, and n times the average estimates the aggregate sensitive
    vector. If any recovered quadratic block is singular the whole pipeline
    reruns once with fresh randomness before giving up with SingularError.
    With noise_off=True the Gaussian terms vanish but the masks stay active,
    which exercises their exact cancellation. key_bits defaults low for
    simulation throughput; raise it for cryptographic fidelity.
    """
    if net.n != problem.n:
        raise ShapeError(f"network has {net.n} agents, problem has {problem.n}")
    if calib.n != problem.n:
        raise CalibrationError(
            f"calibration was built for n={calib.n}, problem has n={problem.n}"
        )
    if rng is None:
        raise ShapeError("rng is required: the protocol draws keys and multipliers")

    if noise_off:
        sigma_gamma = 0.0
        sigma_eta = 0.0
    else:
        sigma_gamma = calib.sigma_gamma
        half_log = 0.5 * calib.log_sigma_eta_sq
        if eta_cap is not None and half_log > math.log(eta_cap):
            sigma_eta = eta_cap
        else:
            sigma_eta = math.exp(half_log)

    thetas = np.stack([pack_sensitive(c) for c in problem.costs])
    data_scale = float(np.max(np.abs(thetas)))

    def attempt() -> SolveOutcome:
        shuffled = run_shuffle(
            net,
            thetas,
            sigma_eta,
            calib.a_max,
            rng,
            key_bits=key_bits,
        )
        gamma = rng.normal(0.0, sigma_gamma, size=thetas.shape) if sigma_gamma > 0 else 0.0
        y0 = thetas + shuffled.masks / calib.mask_den + gamma
        return _consensus_recover(problem, net, y0, rounds, data_scale)

    try:
        return attempt()
    except SingularError:
        outcome = attempt()
        outcome.retried = True
        return outcome


def solve_noisy_consensus(
    problem: GlobalProblem,
    net: Network,
    budget: PrivacyBudget | None,
    rounds: int = DEFAULT_CONSENSUS_ROUNDS,
    rng: np.random.Generator | None = None,
    noise_off: bool = False,
) -> SolveOutcome:
    """Baseline: per-entry Gaussian noise sized for a lone agent, no masks.

    Every agent must withstand full disclosure of its consensus trace, so the
    noise std is mu over the Gaussian mechanism trade-off inverse, n times the
    variance the shuffle route needs.
    """
    if net.n != problem.n:
        raise ShapeError(f"network has {net.n} agents, problem has {problem.n}")
    if noise_off:
        sigma = 0.0
    else:
        if budget is None:
            raise CalibrationError("budget is required unless noise_off=True")
        if rng is None:
            raise ShapeError("rng is required when noise is enabled")
        sigma = budget.mu / gaussian_mechanism_snr(budget.epsilon, budget.delta)

    thetas = np.stack([pack_sensitive(c) for c in problem.costs])
    data_scale = float(np.max(np.abs(thetas)))
    gamma = rng.normal(0.0, sigma, size=thetas.shape) if sigma > 0 else 0.0
    y0 = thetas + gamma

    try:
        return _consensus_recover(problem, net, y0, rounds, data_scale)
    except SingularError:
        gamma = rng.normal(0.0, sigma, size=thetas.shape) if sigma > 0 else 0.0
        outcome = _consensus_recover(problem, net, thetas + gamma, rounds, data_scale)
        outcome.retried = True
        return outcome


def mean_agent_error_sq(outcome: SolveOutcome, x_star: np.ndarray) -> float:
    """Average over agents of the squared distance to a reference solution."""
    diffs = outcome.x_agents - x_star
    return float(np.mean(np.sum(diffs**2, axis=1)))
