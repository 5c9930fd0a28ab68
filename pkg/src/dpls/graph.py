"""Undirected weighted communication graphs and their consensus properties.

Edge weights w_ij lie in (0, 1) and every weighted degree sum_k w_ik must stay
below 1, so the mixing matrix I - L is doubly stochastic with positive diagonal.
For a connected graph the Laplacian eigenvalues satisfy
0 = l_1 < l_2 <= ... <= l_n < 2, and synchronous averaging contracts
disagreement by max(|1 - l_2|, |1 - l_n|) per round.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GraphError

Edge = tuple[int, int]


@dataclass(frozen=True)
class Network:
    n: int
    edges: tuple[Edge, ...]            # sorted, i < j
    weights: tuple[float, ...]         # parallel to edges
    laplacian: np.ndarray = field(repr=False)

    @property
    def mixing(self) -> np.ndarray:
        """Doubly stochastic averaging matrix I - L."""
        return np.eye(self.n) - self.laplacian

    def neighbors(self, i: int) -> list[int]:
        out = [b for a, b in self.edges if a == i]
        out += [a for a, b in self.edges if b == i]
        return sorted(out)

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))

    def weight(self, i: int, j: int) -> float:
        key = (min(i, j), max(i, j))
        return self.weights[self.edges.index(key)]


def build_network(n: int, weighted_edges: list[tuple[int, int, float]]) -> Network:
    """Validate an edge list and assemble the Laplacian.

    Requires n >= 3, weights in (0, 1), no self loops or duplicates, a connected
    graph, and weighted degrees strictly inside (0, 1).
    """
    if n < 3:
        raise GraphError(f"need at least 3 agents, got {n}")
    seen: dict[Edge, float] = {}
    for i, j, w in weighted_edges:
        if i == j:
            raise GraphError(f"self loop at node {i}")
        if not (0 <= i < n and 0 <= j < n):
            raise GraphError(f"edge ({i},{j}) out of range for n={n}")
        if not (0.0 < w < 1.0):
            raise GraphError(f"edge ({i},{j}) weight {w} outside (0,1)")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise GraphError(f"duplicate edge {key}")
        seen[key] = float(w)
    edges = tuple(sorted(seen))
    weights = tuple(seen[e] for e in edges)

    lap = np.zeros((n, n))
    for (i, j), w in zip(edges, weights):
        lap[i, j] = lap[j, i] = -w
        lap[i, i] += w
        lap[j, j] += w
    degrees = np.diag(lap)
    if np.any(degrees <= 0.0) or np.any(degrees >= 1.0):
        bad = int(np.argmax((degrees <= 0.0) | (degrees >= 1.0)))
        raise GraphError(
            f"weighted degree of node {bad} is {degrees[bad]:.6g}, must be in (0,1)"
        )

    # Connectivity by breadth-first search.
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    reached = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in reached:
                    reached.add(v)
                    nxt.append(v)
        frontier = nxt
    if len(reached) != n:
        raise GraphError(f"graph is disconnected ({len(reached)} of {n} reachable)")

    return Network(n=n, edges=edges, weights=weights, laplacian=lap)


def build_cycle(n: int, w: float) -> Network:
    """Ring of n >= 3 agents with one uniform weight w in (0, 0.5)."""
    if n < 3:
        raise GraphError(f"cycle needs at least 3 agents, got {n}")
    if not (0.0 < w < 0.5):
        raise GraphError(f"cycle weight {w} outside (0, 0.5): degrees must stay below 1")
    return build_network(n, [(i, (i + 1) % n, w) for i in range(n)])


def laplacian_eigenvalues(net: Network) -> np.ndarray:
    return np.linalg.eigvalsh(net.laplacian)


def consensus_rate(net: Network) -> float:
    """Per-round contraction factor max(|1 - l_2|, |1 - l_n|) in (0, 1)."""
    eigs = laplacian_eigenvalues(net)
    l2, ln = float(eigs[1]), float(eigs[-1])
    if l2 <= 1e-12:
        raise GraphError("second Laplacian eigenvalue is 0: graph not connected")
    rate = max(abs(1.0 - l2), abs(1.0 - ln))
    if not (0.0 < rate < 1.0):
        raise GraphError(f"consensus rate {rate} outside (0,1)")
    return rate


def save_network(path: str, net: Network) -> None:
    """Write 'n' then one 'i j w' line per edge (0-based ids)."""
    lines = [str(net.n)]
    for (i, j), w in zip(net.edges, net.weights):
        lines.append(f"{i} {j} {w!r}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_network(path: str) -> Network:
    with open(path, "r", encoding="ascii") as fh:
        rows = [row for row in fh.read().split("\n") if row.strip()]
    n = int(rows[0])
    weighted = []
    for row in rows[1:]:
        i, j, w = row.split()
        weighted.append((int(i), int(j), float(w)))
    return build_network(n, weighted)
