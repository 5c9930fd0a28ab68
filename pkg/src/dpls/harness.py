"""Seeded Monte-Carlo experiment runner with CSV persistence.

An experiment is a flat configuration (solver, problem size, graph, privacy
budget, solver parameters, trial count, master seed). Each trial derives its
own seed from the master seed and the trial index through a fixed 64-bit
mixing function, so any single trial can be reproduced in isolation and the
output CSV is byte-identical across reruns and across worker counts.

The problem instance and the network are shared by all trials of one
experiment; trials differ only in noise, keys, and multiplier draws.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from ._util import make_rng, mix_seed
from .errors import (
    ConvergenceError,
    DivergenceError,
    ShapeError,
    SingularError,
)
from .graph import Network, build_cycle, load_network
from .mechanisms import (
    GTCalibration,
    PrivacyBudget,
    ShuffleCalibration,
    calibrate_gradient_tracking,
    calibrate_shuffle_consensus,
)
from .problem import (
    GlobalProblem,
    exact_solution,
    load_problem,
    pack_sensitive,
    random_problem,
)
from .solvers import (
    SolveOutcome,
    mean_agent_error_sq,
    solve_gradient_tracking,
    solve_noisy_consensus,
    solve_shuffle_consensus,
)

SCHEMA_TRIALS = "trials/1"
SCHEMA_TRAJECTORY = "trajectory/1"
SOLVERS = ("gt", "dishuf-ac", "ac-baseline")
TRIAL_COLUMNS = (
    "trial", "solver", "n", "m", "eps", "delta", "mu",
    "error_sq", "mean_agent_error_sq", "iters", "failed",
)
JOBS_ENV = "DPLS_JOBS"
# Seed-mixing index reserved for the shared problem instance; far above any
# realistic trial index, so instance and trial randomness never collide.
INSTANCE_LANE = 1 << 48

# Experiment defaults: n=10 agents on a cycle with weight 0.3, m=3, budget
# mu=3, eps=10, delta=0.2, truncation bound 3.1, step size 0.005, shuffle
# margin g=0.01 and multiplier cap 100. Data amplitudes are chosen so the
# aggregate spectrum keeps the truncation fraction below one at these
# defaults. That stock budget sits below the admissible delta floor of the
# bounded mechanism, so reproducing it verbatim requires validate=False.
DEFAULT_QUAD_AMP = 15.0
DEFAULT_LINEAR_AMP = 15.0
BASE_N = 10


@dataclass(frozen=True)
class ExperimentConfig:
    solver: str = "gt"
    n: int = 10
    m: int = 3
    edge_weight: float = 0.3
    network_file: str | None = None
    problem_file: str | None = None
    eps: float = 10.0
    delta: float = 0.2
    mu: float = 3.0
    beta: float = 0.005
    rounds: int | None = None
    a_max: int = 100
    noise_margin: float = 0.01
    trunc_bound: float | None = 3.1
    trunc_fraction: float | None = None
    quad_amp: float = DEFAULT_QUAD_AMP
    linear_amp: float = DEFAULT_LINEAR_AMP
    key_bits: int = 256
    trials: int = 100
    seed: int | None = None
    validate: bool = True
    jobs: int = 1

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ShapeError(f"unknown solver {self.solver!r}; choose from {SOLVERS}")
        if self.trials < 1:
            raise ShapeError(f"trials must be positive, got {self.trials}")
        if self.seed is None:
            raise ShapeError("seed is mandatory")
        if self.jobs < 1:
            raise ShapeError(f"jobs must be positive, got {self.jobs}")


_BOOL_WORDS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _coerce(name: str, raw: str):
    """Parse a config-file value into the type of the matching field."""
    hints = {f.name: f.type for f in fields(ExperimentConfig)}
    if name not in hints:
        raise ShapeError(f"unknown config key {name!r}")
    text = raw.strip()
    if text.lower() in {"none", ""}:
        return None
    hint = hints[name]
    if name in ("solver", "network_file", "problem_file"):
        return text
    if hint.startswith("bool"):
        low = text.lower()
        if low not in _BOOL_WORDS:
            raise ShapeError(f"config key {name} expects a boolean, got {raw!r}")
        return _BOOL_WORDS[low]
    if hint.startswith("int"):
        return int(text)
    return float(text)


def parse_config_file(path: str) -> dict:
    """Flat key=value lines; '#' starts a comment; later keys win."""
    out: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ShapeError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = stripped.partition("=")
            key = key.strip()
            out[key] = _coerce(key, value)
    return out


def build_config(file_values: dict | None = None, **overrides) -> ExperimentConfig:
    """Merge config-file values and explicit overrides; overrides win."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in overrides.items() if v is not None})
    # An explicit truncation fraction displaces the stock bound override.
    if merged.get("trunc_fraction") is not None and "trunc_bound" not in merged:
        merged["trunc_bound"] = None
    return ExperimentConfig(**merged)


def default_rounds(solver: str, n: int) -> int:
    """Iteration budgets when the config leaves rounds unset.

    Cycle mixing slows quadratically with n, so the caps scale with n^2;
    early stopping exits far sooner on small networks.
    """
    if solver == "gt":
        return max(2000, 3 * n * n)
    return max(500, 3 * n * n)


@dataclass(frozen=True)
class ExperimentSetup:
    """Immutable per-experiment state shared by every trial."""

    config: ExperimentConfig
    problem: GlobalProblem
    net: Network
    x_star: np.ndarray
    theta_total: np.ndarray
    rounds: int
    budget: PrivacyBudget
    gt_calib: GTCalibration | None
    shuffle_calib: ShuffleCalibration | None


def prepare(config: ExperimentConfig) -> ExperimentSetup:
    """Build the instance, network, and calibration for an experiment.

    Raises CalibrationError for infeasible budgets when validation is on.
    """
    if config.network_file is not None:
        net = load_network(config.network_file)
        if net.n != config.n:
            raise ShapeError(
                f"network file has n={net.n}, config says n={config.n}"
            )
    else:
        net = build_cycle(config.n, config.edge_weight)
    if config.problem_file is not None:
        problem = load_problem(config.problem_file)
        if problem.n != config.n or problem.m != config.m:
            raise ShapeError(
                f"problem file is ({problem.n},{problem.m}), config says "
                f"({config.n},{config.m})"
            )
    else:
        inst_rng = make_rng(mix_seed(config.seed, INSTANCE_LANE))
        problem = random_problem(
            config.n, config.m, inst_rng,
            quad_amp=config.quad_amp, linear_amp=config.linear_amp,
        )

    budget = PrivacyBudget(epsilon=config.eps, delta=config.delta, mu=config.mu)
    gt_calib = None
    shuffle_calib = None
    if config.solver == "gt":
        gt_calib = calibrate_gradient_tracking(
            budget,
            lambda_min=problem.lambda_min,
            n=config.n,
            m=config.m,
            trunc_fraction=config.trunc_fraction,
            trunc_bound=config.trunc_bound,
            validate=config.validate,
        )
    elif config.solver == "dishuf-ac":
        shuffle_calib = calibrate_shuffle_consensus(
            budget, n=config.n, a_max=config.a_max, noise_margin=config.noise_margin
        )

    rounds = config.rounds if config.rounds is not None else default_rounds(
        config.solver, config.n
    )
    x_star = exact_solution(problem)
    theta_total = np.stack([pack_sensitive(c) for c in problem.costs]).sum(axis=0)
    return ExperimentSetup(
        config=config,
        problem=problem,
        net=net,
        x_star=x_star,
        theta_total=theta_total,
        rounds=rounds,
        budget=budget,
        gt_calib=gt_calib,
        shuffle_calib=shuffle_calib,
    )


@dataclass
class TrialRow:
    trial: int
    solver: str
    n: int
    m: int
    eps: float
    delta: float
    mu: float
    error_sq: float
    mean_agent_error_sq: float
    iters: int
    failed: bool
    wall_time: float = 0.0
    theta_err_sq: float = math.nan
    trajectory: list[tuple[int, float]] | None = None


def run_solver(setup: ExperimentSetup, rng, record_trajectory: bool = False) -> SolveOutcome:
    cfg = setup.config
    if cfg.solver == "gt":
        return solve_gradient_tracking(
            setup.problem, setup.net, setup.gt_calib, cfg.beta,
            rounds=setup.rounds, rng=rng, record_trajectory=record_trajectory,
        )
    if cfg.solver == "dishuf-ac":
        return solve_shuffle_consensus(
            setup.problem, setup.net, setup.shuffle_calib,
            rounds=setup.rounds, rng=rng, key_bits=cfg.key_bits,
        )
    return solve_noisy_consensus(
        setup.problem, setup.net, setup.budget, rounds=setup.rounds, rng=rng
    )


def run_trial(setup: ExperimentSetup, trial: int, record_trajectory: bool = False) -> TrialRow:
    """Execute one seeded trial; solver failures mark the row, not the run."""
    cfg = setup.config
    rng = make_rng(mix_seed(cfg.seed, trial))
    start = time.perf_counter()
    row = TrialRow(
        trial=trial, solver=cfg.solver, n=cfg.n, m=cfg.m,
        eps=cfg.eps, delta=cfg.delta, mu=cfg.mu,
        error_sq=math.nan, mean_agent_error_sq=math.nan, iters=0, failed=True,
    )
    try:
        outcome = run_solver(setup, rng, record_trajectory=record_trajectory)
    except (ConvergenceError, DivergenceError, SingularError):
        row.wall_time = time.perf_counter() - start
        return row
    row.wall_time = time.perf_counter() - start
    diff = outcome.x_hat - setup.x_star
    row.error_sq = float(diff @ diff)
    row.mean_agent_error_sq = mean_agent_error_sq(outcome, setup.x_star)
    row.iters = outcome.iterations
    row.failed = False
    if outcome.theta_hat is not None:
        tdiff = outcome.theta_hat - setup.theta_total
        row.theta_err_sq = float(tdiff @ tdiff)
    if record_trajectory:
        row.trajectory = list(
            zip(outcome.trajectory_rounds, outcome.trajectory_solution)
        )
    return row


def _trial_worker(args) -> TrialRow:
    setup, trial = args
    return run_trial(setup, trial)


def monte_carlo(config: ExperimentConfig) -> tuple[list[TrialRow], dict]:
    """Run all trials and summarize; deterministic for a given config.

    Trials run concurrently up to config.jobs workers; rows come back in
    trial-index order regardless of scheduling. Failed trials are counted in
    the summary and excluded from its statistics.
    """
    setup = prepare(config)
    indices = range(config.trials)
    if config.jobs > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            rows = list(pool.map(_trial_worker, [(setup, t) for t in indices]))
    else:
        rows = [run_trial(setup, t) for t in indices]
    return rows, summarize(rows)


def quartiles(values) -> tuple[float, float, float]:
    """Inclusive-median quartiles (Tukey hinges).

    The halves used for the hinges include the middle element when the count
    is odd, so every quartile is an observed value or a midpoint of two.
    """
    data = sorted(values)
    if not data:
        raise ShapeError("quartiles need at least one value")

    def median(chunk):
        k = len(chunk)
        mid = k // 2
        if k % 2:
            return float(chunk[mid])
        return 0.5 * (chunk[mid - 1] + chunk[mid])

    half = (len(data) + 1) // 2
    return median(data[:half]), median(data), median(data[len(data) - half:])


def summarize(rows: list[TrialRow]) -> dict:
    good = [r.error_sq for r in rows if not r.failed]
    agent_good = [r.mean_agent_error_sq for r in rows if not r.failed]
    out = {
        "trials": len(rows),
        "failed": sum(1 for r in rows if r.failed),
    }
    if good:
        q1, med, q3 = quartiles(good)
        out.update(mean=float(np.mean(good)), median=med, q1=q1, q3=q3)
        aq1, amed, aq3 = quartiles(agent_good)
        out.update(agent_mean=float(np.mean(agent_good)), agent_median=amed,
                   agent_q1=aq1, agent_q3=aq3)
    return out


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def trial_csv_text(rows: list[TrialRow]) -> str:
    lines = [f"# schema: {SCHEMA_TRIALS}", ",".join(TRIAL_COLUMNS)]
    for r in rows:
        lines.append(",".join(_fmt(getattr(r, col)) for col in TRIAL_COLUMNS))
    return "\n".join(lines) + "\n"


def write_trial_csv(path: str, rows: list[TrialRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(trial_csv_text(rows))


def trajectory_csv_text(points: list[tuple[int, float]]) -> str:
    lines = [f"# schema: {SCHEMA_TRAJECTORY}", "round,mean_sq_error"]
    for rnd, err in points:
        lines.append(f"{rnd},{repr(float(err))}")
    return "\n".join(lines) + "\n"


def write_trajectory_csv(path: str, points: list[tuple[int, float]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(trajectory_csv_text(points))


def sweep_eps_rows(config: ExperimentConfig, eps_values) -> list[TrialRow]:
    """One experiment per epsilon, all other settings shared."""
    rows: list[TrialRow] = []
    for eps in eps_values:
        sub = replace(config, eps=float(eps))
        sub_rows, _ = monte_carlo(sub)
        rows.extend(sub_rows)
    return rows


def scaled_amplitudes(n: int) -> tuple[float, float]:
    """Per-agent data amplitudes that hold the global problem scale fixed.

    Quadratic blocks average, so their amplitude shrinks like 1/n; linear
    blocks add up like a random walk, so theirs shrinks like 1/sqrt(n). The
    reference size is n=10 at the stock amplitudes.
    """
    quad = DEFAULT_QUAD_AMP * BASE_N / n
    linear = DEFAULT_LINEAR_AMP * math.sqrt(BASE_N / n)
    return quad, linear


def sweep_n_rows(config: ExperimentConfig, sizes, solvers=SOLVERS) -> list[TrialRow]:
    """Every solver at every network size, with scale-held amplitudes."""
    rows: list[TrialRow] = []
    for n in sizes:
        quad, linear = scaled_amplitudes(n)
        for solver in solvers:
            sub = replace(config, solver=solver, n=int(n),
                          quad_amp=quad, linear_amp=linear)
            sub_rows, _ = monte_carlo(sub)
            rows.extend(sub_rows)
    return rows


def default_jobs() -> int:
    env = os.environ.get(JOBS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ShapeError(f"{JOBS_ENV} must be an integer, got {env!r}") from exc
    return 1
