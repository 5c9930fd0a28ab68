"""Per-agent quadratic costs and the global least-squares problem.

Each agent i holds f_i(x) = 1/2 x'A_i x + B_i'x + C_i with A_i symmetric.
The network solves sum_i f_i, whose minimizer satisfies (sum A_i) x = -sum B_i.
The privacy-sensitive payload of an agent is the pair (A_i, B_i), flattened to
a single vector: the packed upper triangle of A_i (row-major) followed by B_i.
C_i never enters the optimality condition and is excluded from the payload.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionError, ShapeError

# Relative floor for the smallest eigenvalue of the summed quadratic term.
LAMBDA_MIN_RTOL = 1e-9

# Diagonal shift used by the random instance generator.
GENERATOR_SHIFT = 0.1


def sym_dim(m: int) -> int:
    """Length of the packed upper triangle of an m x m symmetric matrix."""
    return m * (m + 1) // 2


def sensitive_dim(m: int) -> int:
    """Length of an agent's sensitive vector: packed A_i plus B_i."""
    return m * (m + 3) // 2


def sym_to_vec(a: np.ndarray) -> np.ndarray:
    """Flatten a symmetric matrix to its upper triangle, row by row.

    Entry (p, q) with q >= p lands at offset (2m-p+2)(p-1)/2 + q - p + 1 in
    1-based terms, i.e. plain row-major order over the upper triangle.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")
    if not np.array_equal(a, a.T):
        raise ShapeError("matrix is not exactly symmetric")
    m = a.shape[0]
    iu = np.triu_indices(m)
    return a[iu].copy()


def vec_to_sym(v: np.ndarray) -> np.ndarray:
    """Inverse of sym_to_vec: rebuild the symmetric matrix."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ShapeError(f"expected a vector, got shape {v.shape}")
    # Solve m(m+1)/2 = len(v) for integer m.
    m = int((np.sqrt(8 * v.size + 1) - 1) / 2 + 0.5)
    if sym_dim(m) != v.size:
        raise ShapeError(f"length {v.size} is not a packed triangle size")
    out = np.zeros((m, m))
    iu = np.triu_indices(m)
    out[iu] = v
    out.T[iu] = v
    return out


@dataclass(frozen=True)
class QuadraticCost:
    """One agent's cost 1/2 x'Ax + B'x + C, with A stored as its upper triangle."""

    m: int
    quad_upper: np.ndarray  # packed upper triangle of A, length m(m+1)/2
    linear: np.ndarray      # B, length m
    offset: float = 0.0     # C, not part of the sensitive payload

    def __post_init__(self) -> None:
        if self.quad_upper.shape != (sym_dim(self.m),):
            raise ShapeError(
                f"quad_upper must have length {sym_dim(self.m)} for m={self.m}"
            )
        if self.linear.shape != (self.m,):
            raise ShapeError(f"linear must have length {self.m}")

    @property
    def quad(self) -> np.ndarray:
        """Dense symmetric A (reconstructed, symmetric by construction)."""
        return vec_to_sym(self.quad_upper)

    @staticmethod
    def from_dense(a: np.ndarray, b: np.ndarray, c: float = 0.0) -> "QuadraticCost":
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if b.ndim != 1 or a.shape != (b.size, b.size):
            raise ShapeError(f"incompatible shapes {a.shape} and {b.shape}")
        return QuadraticCost(m=b.size, quad_upper=sym_to_vec(a), linear=b.copy(),
                             offset=float(c))


def cost_value(cost: QuadraticCost, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    a = cost.quad
    return float(0.5 * x @ a @ x + cost.linear @ x + cost.offset)


def gradient(cost: QuadraticCost, x: np.ndarray) -> np.ndarray:
    """Gradient A x + B of the agent cost at x."""
    x = np.asarray(x, dtype=float)
    if x.shape != (cost.m,):
        raise ShapeError(f"x must have length {cost.m}")
    return cost.quad @ x + cost.linear


def pack_sensitive(cost: QuadraticCost) -> np.ndarray:
    """Sensitive payload: packed upper triangle of A followed by B."""
    return np.concatenate([cost.quad_upper, cost.linear])


def unpack_sensitive(theta: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Split a sensitive vector back into (dense A, B)."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (sensitive_dim(m),):
        raise ShapeError(f"theta must have length {sensitive_dim(m)} for m={m}")
    k = sym_dim(m)
    return vec_to_sym(theta[:k]), theta[k:].copy()


@dataclass(frozen=True)
class GlobalProblem:
    """Validated collection of agent costs with the summed data cached."""

    costs: tuple[QuadraticCost, ...]
    quad_total: np.ndarray = field(repr=False)    # sum of A_i
    linear_total: np.ndarray = field(repr=False)  # sum of B_i
    lambda_min: float

    @property
    def n(self) -> int:
        return len(self.costs)

    @property
    def m(self) -> int:
        return self.costs[0].m


def build_problem(costs: list[QuadraticCost] | tuple[QuadraticCost, ...]) -> GlobalProblem:
    """Validate agent costs and precompute the global sums.

    Requires every cost to share one dimension and the summed quadratic term to
    be positive definite with margin: lambda_min > 1e-9 * ||sum A_i||.
    """
    costs = tuple(costs)
    if not costs:
        raise ShapeError("at least one agent cost is required")
    m = costs[0].m
    if any(c.m != m for c in costs):
        raise ShapeError("all agent costs must share one dimension")
    quad_total = np.zeros((m, m))
    for c in costs:
        quad_total += c.quad
    linear_total = np.sum([c.linear for c in costs], axis=0)
    eigs = np.linalg.eigvalsh(quad_total)
    lam_min = float(eigs[0])
    norm = float(np.max(np.abs(eigs)))
    if lam_min <= LAMBDA_MIN_RTOL * norm:
        raise AssumptionError(
            f"summed quadratic term not positive definite with margin: "
            f"lambda_min={lam_min:.3e} <= {LAMBDA_MIN_RTOL:.0e} * ||A||={norm:.3e}"
        )
    return GlobalProblem(costs=costs, quad_total=quad_total,
                         linear_total=linear_total, lambda_min=lam_min)


def exact_solution(problem: GlobalProblem) -> np.ndarray:
    """Minimizer of the summed cost: solves (sum A_i) x = -(sum B_i)."""
    a, b = problem.quad_total, problem.linear_total
    x = np.linalg.solve(a, -b)
    residual = float(np.linalg.norm(a @ x + b))
    norm_a = float(np.linalg.norm(a, 2))
    budget = 1e-10 * (norm_a * float(np.linalg.norm(x)) + float(np.linalg.norm(b)))
    if residual > budget:
        raise AssumptionError(
            f"linear solve residual {residual:.3e} above sanity budget {budget:.3e}"
        )
    return x


def random_problem(
    n: int,
    m: int,
    rng: np.random.Generator,
    quad_amp: float = 1.0,
    linear_amp: float = 1.0,
) -> GlobalProblem:
    """Random instance: A_i built from M M'/m plus a small diagonal shift.

    Entries of M are uniform on [-1, 1]; B_i uniform on [-linear_amp, linear_amp].
    The construction is positive definite for generic draws; the rare failing
    draw is rejected and redrawn.
    """
    for _ in range(100):
        costs = []
        for _ in range(n):
            mm = rng.uniform(-1.0, 1.0, size=(m, m))
            raw = mm @ mm.T / m + GENERATOR_SHIFT * np.eye(m)
            # Materialize through the packed form so A_i is exactly symmetric.
            upper = raw[np.triu_indices(m)] * quad_amp
            b = rng.uniform(-linear_amp, linear_amp, size=m)
            costs.append(QuadraticCost(m=m, quad_upper=upper, linear=b))
        try:
            return build_problem(costs)
        except AssumptionError:
            continue
    raise AssumptionError("could not draw a positive definite instance")


def save_problem(path: str, costs: list[QuadraticCost] | tuple[QuadraticCost, ...]) -> None:
    """Write agent costs as text: header "m n", then per agent one line with the
    packed upper triangle of A_i and one line with B_i."""
    costs = tuple(costs)
    m = costs[0].m
    lines = [f"{m} {len(costs)}"]
    for c in costs:
        lines.append(" ".join(repr(v) for v in c.quad_upper.tolist()))
        lines.append(" ".join(repr(v) for v in c.linear.tolist()))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_problem(path: str) -> GlobalProblem:
    """Read the format written by save_problem and validate it."""
    with open(path, "r", encoding="ascii") as fh:
        tokens = fh.read().split("\n")
    rows = [row for row in tokens if row.strip()]
    header = rows[0].split()
    if len(header) != 2:
        raise ShapeError("problem file header must be 'm n'")
    m, n = int(header[0]), int(header[1])
    if len(rows) != 1 + 2 * n:
        raise ShapeError(f"expected {2 * n} data lines, found {len(rows) - 1}")
    costs = []
    for i in range(n):
        upper = np.array([float(t) for t in rows[1 + 2 * i].split()])
        b = np.array([float(t) for t in rows[2 + 2 * i].split()])
        if upper.size != sym_dim(m) or b.size != m:
            raise ShapeError(f"agent {i}: wrong entry counts for m={m}")
        costs.append(QuadraticCost(m=m, quad_upper=upper, linear=b))
    return build_problem(costs)
