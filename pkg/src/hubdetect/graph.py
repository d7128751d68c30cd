"""Undirected weighted graphs, random generators, and spectral utilities.

The adjacency matrix is the shift operator used everywhere in this package;
all graphs are stored dense (experiments stay well below a few thousand
nodes).
"""

from __future__ import annotations

import functools
from collections import deque
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Graph",
    "Spectrum",
    "CpParams",
    "BaParams",
    "GraphGenerationError",
    "generate_cp",
    "generate_ba",
    "eigencentrality",
    "top_c_nodes",
    "spectral_gap",
    "save_edgelist",
    "load_edgelist",
    "save_adjacency_csv",
    "load_adjacency_csv",
]


class GraphGenerationError(RuntimeError):
    """Raised when a random generator cannot produce a valid graph."""


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition of a symmetric adjacency matrix.

    ``eigenvalues`` are sorted descending and ``eigenvectors[:, i]`` is the
    unit eigenvector paired with ``eigenvalues[i]``.  Each eigenvector is
    sign-fixed so that its largest-magnitude entry is nonnegative, which
    makes every downstream ranking deterministic.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _sign_fix_columns(V: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[idx, np.arange(V.shape[1])] < 0, -1.0, 1.0)
    return V * signs


def _is_connected(adjacency: np.ndarray) -> bool:
    n = adjacency.shape[0]
    if n == 0:
        return False
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in np.nonzero(adjacency[i] > 0)[0]:
            if not seen[j]:
                seen[j] = True
                queue.append(j)
    return bool(seen.all())


class Graph:
    """Symmetric nonnegative adjacency with a cached eigendecomposition.

    Weighted matrices are accepted; the random generators below produce 0/1
    adjacencies.  Instances are immutable and safe to share across threads.
    """

    def __init__(self, adjacency: np.ndarray):
        A = np.asarray(adjacency, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {A.shape}")
        if not np.array_equal(A, A.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(A < 0):
            raise ValueError("adjacency must be nonnegative")
        if np.any(np.diagonal(A) != 0):
            raise ValueError("adjacency must have a zero diagonal")
        A = A.copy()
        A.setflags(write=False)
        self._adjacency = A
        self.n: int = A.shape[0]
        self.connected: bool = _is_connected(A)

    @property
    def adjacency(self) -> np.ndarray:
        return self._adjacency

    @functools.cached_property
    def spectrum(self) -> Spectrum:
        lam, V = np.linalg.eigh(self._adjacency)
        order = np.argsort(lam)[::-1]
        lam = lam[order]
        V = _sign_fix_columns(V[:, order])
        lam.setflags(write=False)
        V.setflags(write=False)
        return Spectrum(eigenvalues=lam, eigenvectors=V)

    def __repr__(self) -> str:  # pragma: no cover
        edges = int(np.count_nonzero(self._adjacency) // 2)
        return f"Graph(n={self.n}, edges={edges}, connected={self.connected})"


@dataclass(frozen=True)
class CpParams:
    """Two-block core-periphery model parameters.

    Edges are Bernoulli with probability ``p1`` inside the core,
    ``min(p1, 4 * p2)`` between core and periphery, and ``p2`` inside the
    periphery.  Core nodes are ``0 .. core_size - 1``.
    """

    n: int
    p1: float
    p2: float
    core_size: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.p2 <= self.p1 <= 1:
            raise ValueError(f"need 0 < p2 <= p1 <= 1, got p1={self.p1}, p2={self.p2}")
        if not 0 < self.core_size < self.n:
            raise ValueError(f"need 0 < core_size < n, got {self.core_size}, {self.n}")


@dataclass(frozen=True)
class BaParams:
    """Degree-proportional preferential attachment parameters."""

    n: int
    m_attach: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.m_attach < self.n:
            raise ValueError(f"need 1 <= m_attach < n, got {self.m_attach}, {self.n}")


_CP_MAX_ATTEMPTS = 100


def generate_cp(params: CpParams) -> Graph:
    """Sample a connected core-periphery graph, resampling until connected.

    Raises :class:`GraphGenerationError` after 100 disconnected draws, which
    signals that the edge probabilities are too sparse.
    """
    n, cs = params.n, params.core_size
    probs = np.full((n, n), params.p2)
    probs[:cs, :] = probs[:, :cs] = min(params.p1, 4.0 * params.p2)
    probs[:cs, :cs] = params.p1
    rng = np.random.default_rng(params.seed)
    for _ in range(_CP_MAX_ATTEMPTS):
        upper = np.triu(rng.uniform(size=(n, n)) < probs, k=1)
        A = (upper | upper.T).astype(float)
        if _is_connected(A):
            return Graph(A)
    raise GraphGenerationError(
        f"no connected graph in {_CP_MAX_ATTEMPTS} attempts "
        f"(n={n}, p1={params.p1}, p2={params.p2})"
    )


def generate_ba(params: BaParams) -> Graph:
    """Grow a preferential-attachment graph from a complete seed clique.

    The seed subgraph is complete on ``m_attach`` nodes so degree-proportional
    sampling is well defined from the first attachment step.  Each new node
    attaches to ``m_attach`` distinct existing nodes, chosen without
    replacement with probability proportional to current degree.  The result
    is connected by construction.
    """
    n, m = params.n, params.m_attach
    rng = np.random.default_rng(params.seed)
    A = np.zeros((n, n))
    A[:m, :m] = 1.0
    np.fill_diagonal(A, 0.0)
    degrees = A.sum(axis=1)
    for new in range(m, n):
        targets = rng.choice(new, size=m, replace=False, p=degrees[:new] / degrees[:new].sum())
        A[new, targets] = A[targets, new] = 1.0
        degrees[targets] += 1.0
        degrees[new] = m
    return Graph(A)


def eigencentrality(g: Graph) -> np.ndarray:
    """Unit-norm top eigenvector of the adjacency (the centrality scores).

    Requires a connected graph; entries are then nonnegative up to numerical
    tolerance by Perron-Frobenius.
    """
    if not g.connected:
        raise ValueError("eigencentrality requires a connected graph")
    v = g.spectrum.eigenvectors[:, 0]
    if v.min() < -1e-10:
        raise ArithmeticError("top eigenvector has a significantly negative entry")
    return v


def top_c_nodes(scores: np.ndarray, c: int) -> frozenset[int]:
    """Indices of the ``c`` largest ``|scores|``, ties broken by lower index."""
    scores = np.asarray(scores, dtype=float)
    n = scores.shape[0]
    if not 1 <= c <= n:
        raise ValueError(f"need 1 <= c <= {n}, got {c}")
    order = np.argsort(-np.abs(scores), kind="stable")
    return frozenset(int(i) for i in order[:c])


def spectral_gap(g: Graph) -> float:
    """Ratio of the second to the first adjacency eigenvalue (signed)."""
    if not g.connected:
        raise ValueError("spectral_gap requires a connected graph")
    lam = g.spectrum.eigenvalues
    return float(lam[1] / lam[0])


def save_edgelist(g: Graph, path) -> None:
    """Write ``n=<count>`` followed by one ``i j w`` line per edge (i < j)."""
    A = g.adjacency
    i_idx, j_idx = np.nonzero(np.triu(A, k=1))
    with open(path, "w") as fh:
        fh.write(f"n={g.n}\n")
        for i, j in zip(i_idx, j_idx):
            fh.write(f"{i} {j} {A[i, j]:.17g}\n")


def load_edgelist(path) -> Graph:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("n="):
            raise ValueError(f"expected 'n=<count>' header, got {header!r}")
        n = int(header[2:])
        A = np.zeros((n, n))
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'i j w', got {line!r}")
            i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
            A[i, j] = A[j, i] = w
    return Graph(A)


def save_adjacency_csv(g: Graph, path) -> None:
    np.savetxt(path, g.adjacency, fmt="%.17g", delimiter=",")


def load_adjacency_csv(path) -> Graph:
    return Graph(np.atleast_2d(np.loadtxt(path, delimiter=",")))
