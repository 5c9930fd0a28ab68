"""Noise mechanisms and privacy calibration.

Two scalar mechanisms appear throughout: zero-mean Gaussian noise, and Laplace
noise truncated to a bounded interval. Calibration works against an
(epsilon, delta) budget under per-coordinate adjacency: neighbouring data sets
differ in one coordinate by at most mu.

The Gaussian side is driven by the trade-off function

    delta(epsilon, s) = Phi(s/2 - eps/s) - e^eps * Phi(-s/2 - eps/s),

where s is the sensitivity-to-noise ratio mu/sigma. It is strictly increasing
in s, so the minimal noise for a budget is sigma = mu / s*(epsilon, delta) with
s* its inverse, computed here by bracket doubling plus bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import log_ndtr

from .errors import AdjacencyError, CalibrationError, ShapeError

SNR_BISECT_TOL = 1e-12


def std_normal_cdf(s: float) -> float:
    """Standard normal CDF via the complementary error function.

    erfc keeps full relative accuracy deep in the lower tail, which matters when
    the trade-off function multiplies tail mass by e^eps.
    """
    return 0.5 * math.erfc(-float(s) / math.sqrt(2.0))


def gaussian_mechanism_delta(epsilon: float, snr: float) -> float:
    """Exact delta achieved by a Gaussian mechanism at ratio snr = mu/sigma."""
    if epsilon <= 0:
        raise CalibrationError(f"epsilon must be positive, got {epsilon}")
    if snr <= 0:
        raise CalibrationError(f"snr must be positive, got {snr}")
    term1 = std_normal_cdf(snr / 2.0 - epsilon / snr)
    # e^eps * Phi(arg) evaluated in log space: the plain product can hit an
    # underflowing Phi against an overflowing exponential.
    log_term2 = epsilon + float(log_ndtr(-snr / 2.0 - epsilon / snr))
    term2 = math.exp(log_term2) if log_term2 < 700.0 else math.inf
    return term1 - term2


def gaussian_mechanism_snr(epsilon: float, delta: float) -> float:
    """Inverse of gaussian_mechanism_delta in its second argument.

    Bracket doubling from s=1 followed by bisection to 1e-12; the trade-off
    function is strictly increasing in s with range (0, 1).
    """
    if not (0.0 < delta < 1.0):
        raise CalibrationError(f"delta must lie in (0,1), got {delta}")
    lo = hi = 1.0
    for _ in range(2000):
        if gaussian_mechanism_delta(epsilon, lo) <= delta:
            break
        lo /= 2.0
    else:
        raise CalibrationError("bracket expansion failed downward")
    for _ in range(2000):
        if gaussian_mechanism_delta(epsilon, hi) >= delta:
            break
        hi *= 2.0
    else:
        raise CalibrationError("bracket expansion failed upward")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gaussian_mechanism_delta(epsilon, mid) < delta:
            lo = mid
        else:
            hi = mid
        if hi - lo <= SNR_BISECT_TOL * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def delta_floor(epsilon: float, ratio: float) -> float:
    """Smallest admissible delta for the truncated Laplace mechanism,
    (e^eps - 1) / (2 (e^(eps/ratio) - 1)), with ratio = mu / bound."""
    if ratio <= 0:
        raise CalibrationError(f"ratio must be positive, got {ratio}")
    big = epsilon / ratio
    if big > 700.0:
        # Denominator exponential overflows; the floor is e^(eps - eps/ratio)/2
        # up to a factor that is 1 to machine precision.
        return 0.5 * math.exp(epsilon - big)
    return math.expm1(epsilon) / (2.0 * math.expm1(big))


# -- truncated Laplace ---------------------------------------------------------


def trunc_laplace_pdf(mu: float, epsilon: float, bound: float, z):
    """Density eps/(2 mu (1-e^(-eps*bound/mu))) * e^(-eps|z|/mu) on [-bound, bound]."""
    z = np.asarray(z, dtype=float)
    scale = mu / epsilon
    norm = 1.0 / (2.0 * scale * -math.expm1(-bound / scale))
    out = norm * np.exp(-np.abs(z) / scale)
    return np.where(np.abs(z) <= bound, out, 0.0)


def trunc_laplace_variance(mu: float, epsilon: float, bound: float) -> float:
    """Closed-form variance of the truncated Laplace distribution."""
    _check_trunc_params(mu, epsilon, bound)
    scale = mu / epsilon
    e = math.exp(-bound / scale)
    return (1.0 / (1.0 - e)) * (
        2.0 * scale**2 - e * (bound**2 + 2.0 * scale * bound + 2.0 * scale**2)
    )


def trunc_laplace_cdf(x, mu: float, epsilon: float, bound: float):
    """Distribution function of the truncated Laplace law, vectorized in x."""
    _check_trunc_params(mu, epsilon, bound)
    scale = mu / epsilon
    e = math.exp(-bound / scale)
    x = np.asarray(x, dtype=float)
    z = np.clip(x, -bound, bound)
    coef = 0.5 / (1.0 - e)
    lower = coef * (np.exp(z / scale) - e)
    upper = 1.0 - coef * (np.exp(-z / scale) - e)
    out = np.where(z <= 0.0, lower, upper)
    out = np.where(x < -bound, 0.0, out)
    out = np.where(x > bound, 1.0, out)
    if np.isscalar(x) or out.ndim == 0:
        return float(out)
    return out


def trunc_laplace_sample(
    mu: float,
    epsilon: float,
    bound: float,
    rng: np.random.Generator,
    size=None,
):
    """Inverse-CDF sampling: one uniform per sample, no rejection.

    For u <= 1/2 the CDF inverts to scale*log(2u(1-e^(-bound/scale)) + e^(-bound/scale));
    the upper half follows by symmetry.
    """
    _check_trunc_params(mu, epsilon, bound)
    scale = mu / epsilon
    e = math.exp(-bound / scale)
    u = rng.random(size=size)
    lower = np.minimum(u, 1.0 - u)
    mag = -scale * np.log(2.0 * lower * (1.0 - e) + e)  # |z| for tail prob `lower`
    out = np.where(u <= 0.5, -mag, mag)
    out = np.clip(out, -bound, bound)  # guard float overshoot at the edges
    if size is None:
        return float(out)
    return out


def _check_trunc_params(mu: float, epsilon: float, bound: float) -> None:
    if mu <= 0 or epsilon <= 0 or bound <= 0:
        raise CalibrationError(
            f"mu, epsilon, bound must be positive, got ({mu}, {epsilon}, {bound})"
        )


# -- budgets and calibrations --------------------------------------------------


@dataclass(frozen=True)
class PrivacyBudget:
    """(epsilon, delta) budget under per-coordinate adjacency bound mu."""

    epsilon: float
    delta: float
    mu: float

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise CalibrationError(f"epsilon must be positive, got {self.epsilon}")
        if not (0.0 < self.delta < 1.0):
            raise CalibrationError(f"delta must lie in (0,1), got {self.delta}")
        if self.mu <= 0:
            raise CalibrationError(f"mu must be positive, got {self.mu}")


@dataclass(frozen=True)
class GTCalibration:
    """Noise levels for the gradient-tracking solver.

    trunc_bound caps each quadratic-term perturbation entry; adjacency_ratio is
    mu / trunc_bound; trunc_fraction says what fraction of the guaranteed
    minimum curvature the total perturbation may consume. sigma_eta is the
    Gaussian std on the linear term; sigma_gamma_sq the variance of one
    truncated-Laplace draw. feasible is False when constructed with validation
    off on an infeasible parameter set; violations lists what failed.
    """

    budget: PrivacyBudget
    trunc_bound: float
    adjacency_ratio: float
    trunc_fraction: float
    sigma_eta: float
    sigma_gamma_sq: float
    snr: float
    feasible: bool = True
    violations: tuple[str, ...] = ()


def calibrate_gradient_tracking(
    budget: PrivacyBudget,
    lambda_min: float,
    n: int,
    m: int,
    trunc_fraction: float | None = None,
    trunc_bound: float | None = None,
    validate: bool = True,
) -> GTCalibration:
    """Derive gradient-tracking noise levels from a budget and problem curvature.

    Exactly one of trunc_fraction and trunc_bound must be given; the other is
    derived through trunc_bound = trunc_fraction * lambda_min / (sqrt(n) * m).
    With validate=True the feasibility inequalities are enforced:
    trunc_fraction in (0,1), adjacency ratio in (0,1), delta < 1/2, and
    delta >= delta_floor(epsilon, ratio). With validate=False everything is
    still computed and the violated inequalities are recorded.
    """
    if (trunc_fraction is None) == (trunc_bound is None):
        raise CalibrationError("give exactly one of trunc_fraction, trunc_bound")
    if lambda_min <= 0:
        raise CalibrationError(f"lambda_min must be positive, got {lambda_min}")
    if trunc_bound is None:
        trunc_bound = trunc_fraction * lambda_min / (math.sqrt(n) * m)
    else:
        trunc_fraction = trunc_bound * math.sqrt(n) * m / lambda_min
    if trunc_bound <= 0:
        raise CalibrationError(f"trunc_bound must be positive, got {trunc_bound}")

    ratio = budget.mu / trunc_bound
    violations: list[str] = []
    if not (0.0 < trunc_fraction < 1.0):
        violations.append(
            f"trunc_fraction {trunc_fraction:.6g} outside (0,1): truncation level "
            f"exceeds the curvature margin"
        )
    if ratio >= 1.0:
        violations.append(
            f"adjacency ratio mu/trunc_bound = {ratio:.6g} >= 1: adjacency bound "
            f"too large for the truncation level"
        )
    floor = delta_floor(budget.epsilon, ratio) if ratio > 0 else math.inf
    if budget.delta >= 0.5:
        violations.append(f"delta {budget.delta} >= 1/2")
    if budget.delta < floor:
        violations.append(
            f"delta {budget.delta:.6g} below the admissible floor {floor:.6g} "
            f"for epsilon={budget.epsilon}, ratio={ratio:.6g}"
        )
    if validate and violations:
        if ratio >= 1.0:
            raise AdjacencyError("; ".join(violations))
        raise CalibrationError("; ".join(violations))

    snr = gaussian_mechanism_snr(budget.epsilon, budget.delta)
    return GTCalibration(
        budget=budget,
        trunc_bound=float(trunc_bound),
        adjacency_ratio=float(ratio),
        trunc_fraction=float(trunc_fraction),
        sigma_eta=budget.mu / snr,
        sigma_gamma_sq=trunc_laplace_variance(budget.mu, budget.epsilon, trunc_bound),
        snr=snr,
        feasible=not violations,
        violations=tuple(violations),
    )


@dataclass(frozen=True)
class ShuffleCalibration:
    """Noise levels for the shuffle-mask consensus solver.

    sigma_gamma is the std of the persistent Gaussian noise (the only term that
    survives in the recovered sum); sigma_eta_sq the variance of the masked
    Gaussian noise that cancels across the network. mixing_factor is the
    auxiliary factor of the calibration, astronomically close to 1 for large n:
    mixing_gap stores 1 - mixing_factor and the log fields stay finite when the
    plain floats saturate (mixing_factor rounds to 1.0 beyond n ~ 13 and
    sigma_eta_sq overflows float64 around n ~ 40).

    mask_den is the exact integer n * a_max^2 + 1 whose reciprocal scales the
    zero-sum masks.
    """

    budget: PrivacyBudget
    n: int
    a_max: int
    noise_margin: float
    sigma_gamma: float
    sigma_eta_sq: float
    log_sigma_eta_sq: float
    mixing_factor: float
    mixing_gap: float
    log_mixing_gap: float
    mask_den: int
    snr: float

    @property
    def mask_scale(self) -> float:
        return 1.0 / self.mask_den


def shuffle_mixing_gap_log(n: int, a_max: int) -> float:
    """log(1 - mixing_factor) for the shuffle calibration, always finite.

    mixing_factor = (1 - q)^(1/(n-1)) with q = (2(n + a_max^-2))^-(n-1); the gap
    is q/(n-1) to first order, far below float range already for modest n.
    """
    log_q = -(n - 1) * math.log(2.0 * (n + a_max**-2))
    if log_q > -700.0:
        q = math.exp(log_q)
        gap = -math.expm1(math.log1p(-q) / (n - 1))
        return math.log(gap)
    return log_q - math.log(n - 1)


def calibrate_shuffle_consensus(
    budget: PrivacyBudget,
    n: int,
    a_max: int,
    noise_margin: float,
) -> ShuffleCalibration:
    """Derive shuffle-consensus noise levels for n agents.

    noise_margin is the fractional over-noising above the exact Gaussian scale;
    a_max bounds the random integer mask multipliers. Infeasible when the
    bracketed variance term is not positive, i.e. when
    n(n-1) * mixing_factor^2 <= (1+noise_margin)^2 - 1.
    """
    if n < 3:
        raise CalibrationError(f"need at least 3 agents, got {n}")
    if a_max < 10:
        raise CalibrationError(f"a_max must be at least 10, got {a_max}")
    if noise_margin <= 0:
        raise CalibrationError(f"noise_margin must be positive, got {noise_margin}")

    log_gap = shuffle_mixing_gap_log(n, a_max)
    gap = math.exp(log_gap) if log_gap > -745.0 else 0.0
    log_factor = math.log1p(-gap)  # ~ -gap, exactly 0 once gap underflows
    factor = 1.0 - gap

    snr = gaussian_mechanism_snr(budget.epsilon, budget.delta)
    one_plus = 1.0 + noise_margin
    sigma_gamma = one_plus * budget.mu / (math.sqrt(n) * snr)

    factor_sq = math.exp(2.0 * log_factor)
    bracket = (one_plus**2 * budget.mu**2) / (one_plus**2 - 1.0) - (
        one_plus**2 * budget.mu**2
    ) / (n * (n - 1) * factor_sq)
    if bracket <= 0.0:
        raise CalibrationError(
            f"masked-noise variance not positive: need n(n-1)*factor^2 > "
            f"(1+margin)^2 - 1, got {n * (n - 1) * factor_sq:.6g} <= "
            f"{one_plus**2 - 1.0:.6g}"
        )
    log_sigma_eta_sq = (
        math.log(n - 1)
        + 2.0 * log_factor
        + math.log(bracket)
        - 2.0 * log_gap
        - 2.0 * math.log(snr)
    )
    sigma_eta_sq = math.exp(log_sigma_eta_sq) if log_sigma_eta_sq < 709.0 else math.inf

    return ShuffleCalibration(
        budget=budget,
        n=n,
        a_max=int(a_max),
        noise_margin=float(noise_margin),
        sigma_gamma=float(sigma_gamma),
        sigma_eta_sq=sigma_eta_sq,
        log_sigma_eta_sq=log_sigma_eta_sq,
        mixing_factor=factor,
        mixing_gap=gap,
        log_mixing_gap=log_gap,
        mask_den=n * a_max**2 + 1,
        snr=snr,
    )


# -- numerical privacy verification -------------------------------------------


@dataclass(frozen=True)
class GaussianMechanism:
    sigma: float


@dataclass(frozen=True)
class TruncatedLaplaceMechanism:
    mu: float
    epsilon: float
    bound: float


def worst_case_delta(mechanism, budget: PrivacyBudget) -> float:
    """Numerically measured delta of a scalar mechanism at budget.epsilon.

    Integrates the excess mass integral max(p0(z) - e^eps p_shift(z), 0) dz at
    the worst-case adjacent shift |shift| = budget.mu, by adaptive quadrature.
    Independent of the closed-form calibration formulas, so it can serve as
    their oracle. Returns a value in [0, 1].
    """
    eps = budget.epsilon
    shift = budget.mu
    if isinstance(mechanism, GaussianMechanism):
        hat = _gaussian_excess_mass(mechanism.sigma, eps, shift)
    elif isinstance(mechanism, TruncatedLaplaceMechanism):
        hat = _trunc_laplace_excess_mass(mechanism, eps, shift)
    else:
        raise ShapeError(f"unsupported mechanism {type(mechanism).__name__}")
    return min(max(hat, 0.0), 1.0)


def _gaussian_excess_mass(sigma: float, eps: float, shift: float) -> float:
    def p0(z):
        return math.exp(-0.5 * (z / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))

    def p1(z):
        return math.exp(-0.5 * ((z - shift) / sigma) ** 2) / (
            sigma * math.sqrt(2 * math.pi)
        )

    # log p0 - log p1 = (shift^2 - 2 z shift) / (2 sigma^2): strictly decreasing
    # in z, so the excess region is a left half-line ending at the crossover.
    crossover = shift / 2.0 - eps * sigma**2 / shift
    val, _ = integrate.quad(
        lambda z: p0(z) - math.exp(eps) * p1(z),
        -math.inf,
        crossover,
        epsabs=1e-14,
        limit=400,
    )
    return val


def _trunc_laplace_excess_mass(
    mech: TruncatedLaplaceMechanism, eps: float, shift: float
) -> float:
    b = mech.bound

    def f(z: float) -> float:
        p0 = float(trunc_laplace_pdf(mech.mu, mech.epsilon, b, z))
        p1 = float(trunc_laplace_pdf(mech.mu, mech.epsilon, b, z - shift))
        return max(p0 - math.exp(eps) * p1, 0.0)

    # Integrand kinks sit where either support ends and where |z| or |z-shift|
    # change sign; list them all as quadrature breakpoints.
    points = sorted(
        p for p in (-b, b, shift - b, shift + b, 0.0, shift) if -b <= p <= b
    )
    total = 0.0
    for lo, hi in zip(points[:-1], points[1:]):
        if hi - lo < 1e-15:
            continue
        val, _ = integrate.quad(f, lo, hi, epsabs=1e-14, limit=400)
        total += val
    return total
