"""Central-node detection pipelines and data-driven heuristics.

Three detectors: plain PCA of the sample second moment (strong low-pass
filters), a semi-blind robust-PCA route that uses known latent parameters,
and the fully blind two-stage sparse-NMF + robust-PCA pipeline.  A
correlation-kNN graph detector serves as the baseline.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .graph import top_c_nodes
from .seeding import derive_seed
from .solvers import NmfConfig, RpcaConfig, nmf_pgd, refit_h, rpca

__all__ = [
    "DetectionResult",
    "FilterStrength",
    "detect_pca",
    "detect_rpca_semiblind",
    "detect_two_stage",
    "top_c_frequencies",
    "correlation_knn_adjacency",
    "detect_knn_baseline",
    "estimate_rank",
    "classify_filter_strength",
    "result_to_json",
    "result_from_json",
]


@dataclass(frozen=True)
class DetectionResult:
    """Centrality estimate: unit-norm sign-fixed scores, the full ranking by
    descending magnitude (ties by ascending node index), and the top-c set."""

    scores: np.ndarray
    ranking: np.ndarray
    top_c: frozenset[int]
    method_tag: str


class FilterStrength(enum.Enum):
    STRONG = "strong"
    GENERAL = "general"


def _sign_fix(v: np.ndarray) -> np.ndarray:
    return -v if v[np.argmax(np.abs(v))] < 0 else v


def _result_from_scores(scores: np.ndarray, c: int, tag: str) -> DetectionResult:
    scores = np.asarray(scores, dtype=float)
    norm = np.linalg.norm(scores)
    if norm > 0:
        scores = scores / norm
    scores = _sign_fix(scores)
    ranking = np.argsort(-np.abs(scores), kind="stable")
    return DetectionResult(
        scores=scores,
        ranking=ranking,
        top_c=top_c_nodes(scores, c),
        method_tag=tag,
    )


def _second_moment(Y: np.ndarray, center: bool) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    if Y.shape[1] < 1:
        raise ValueError("need at least one signal column")
    if center:
        Y = Y - Y.mean(axis=1, keepdims=True)
    return (Y @ Y.T) / Y.shape[1]


def detect_pca(Y: np.ndarray, c: int, center: bool = False) -> DetectionResult:
    """Rank nodes by the top eigenvector of the sample second moment.

    The second moment is uncentered by default (``center=True`` subtracts
    row means first).  Scale-invariant: ``detect_pca(s * Y)`` produces the
    identical ranking for any s > 0.
    """
    C = _second_moment(Y, center)
    _, vecs = np.linalg.eigh(C)
    return _result_from_scores(vecs[:, -1], c, "pca")


def _top_left_singular_vector(M: np.ndarray) -> np.ndarray:
    U, _, _ = np.linalg.svd(M, full_matrices=False)
    return U[:, 0]


def detect_rpca_semiblind(
    Y: np.ndarray,
    Z: np.ndarray,
    cfg: Optional[RpcaConfig] = None,
    c: int = 10,
) -> DetectionResult:
    """Detect with known latent parameters ``Z``.

    Refits the filtered basis by least squares on ``Z``, splits off the
    sparse part with robust PCA, and ranks by the top left singular vector
    of the recovered low-rank component.
    """
    H = refit_h(Y, Z)
    sol = rpca(H, cfg)
    return _result_from_scores(_top_left_singular_vector(sol.L_hat), c, "rpca")


def _two_stage_scores(
    Y: np.ndarray,
    nmf_cfg: NmfConfig,
    rpca_cfg: Optional[RpcaConfig],
) -> np.ndarray:
    nmf_sol = nmf_pgd(Y, nmf_cfg)
    H = refit_h(Y, nmf_sol.Z_hat)
    sol = rpca(H, rpca_cfg)
    return _top_left_singular_vector(sol.L_hat)


def top_c_frequencies(
    Y: np.ndarray,
    nmf_cfg: NmfConfig,
    rpca_cfg: Optional[RpcaConfig] = None,
    c: int = 10,
    restarts: int = 1,
) -> np.ndarray:
    """Count, per node, how often it lands in the top-c over NMF restarts.

    Restart ``r`` reruns the NMF stage with a seed derived from
    ``(nmf_cfg.seed, r)``; restart 0 uses ``nmf_cfg.seed`` itself.
    """
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    counts = np.zeros(Y.shape[0])
    for r in range(restarts):
        cfg_r = nmf_cfg if r == 0 else replace(nmf_cfg, seed=derive_seed(nmf_cfg.seed, "restart", r))
        scores = _two_stage_scores(Y, cfg_r, rpca_cfg)
        for node in top_c_nodes(scores, c):
            counts[node] += 1.0
    return counts


def detect_two_stage(
    Y: np.ndarray,
    nmf_cfg: NmfConfig,
    rpca_cfg: Optional[RpcaConfig] = None,
    c: int = 10,
    restarts: int = 1,
) -> DetectionResult:
    """Fully blind detection: sparse NMF -> least-squares refit -> robust PCA
    -> top left singular vector of the low-rank part.

    With ``restarts > 1`` the NMF stage is rerun from fresh random
    initializations and nodes are ranked by how often they enter the top-c
    (ties by ascending node index); the returned scores are the normalized
    membership frequencies.  Deterministic given the configured seeds.
    """
    if restarts == 1:
        return _result_from_scores(_two_stage_scores(Y, nmf_cfg, rpca_cfg), c, "two-stage")
    counts = top_c_frequencies(Y, nmf_cfg, rpca_cfg, c, restarts)
    return _result_from_scores(counts, c, "two-stage")


def correlation_knn_adjacency(Y: np.ndarray, knn: int) -> np.ndarray:
    """0/1 adjacency linking each node to its ``knn`` most Pearson-correlated
    peers (ties by lower index), symmetrized by union.

    Rows with zero variance get correlation 0 against everything.
    """
    Y = np.asarray(Y, dtype=float)
    n = Y.shape[0]
    if knn < 1:
        raise ValueError(f"knn must be >= 1, got {knn}")
    if knn >= n:
        raise ValueError(f"knn must be < n={n}, got {knn}")
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.corrcoef(Y)
    corr = np.nan_to_num(corr, nan=0.0)
    np.fill_diagonal(corr, -np.inf)
    A = np.zeros((n, n))
    for i in range(n):
        neighbors = np.argsort(-corr[i], kind="stable")[:knn]
        A[i, neighbors] = 1.0
    return np.maximum(A, A.T)


def detect_knn_baseline(Y: np.ndarray, knn: int, c: int) -> DetectionResult:
    """Baseline: eigen-centrality of the correlation k-nearest-neighbor graph.

    The kNN graph may be disconnected, so the ranking uses the top adjacency
    eigenvector directly.
    """
    A = correlation_knn_adjacency(Y, knn)
    _, vecs = np.linalg.eigh(A)
    return _result_from_scores(vecs[:, -1], c, "knn")


def estimate_rank(Y: np.ndarray, k_min: int = 2, k_max: Optional[int] = None) -> int:
    """Heuristic excitation-rank estimate from the second-moment spectrum.

    Returns the index i in ``[k_min, k_max]`` (default ``[2, n // 2]``)
    maximizing the log-gap ``log(sigma_i / sigma_{i+1})`` of the descending
    eigenvalues of the sample second moment.
    """
    Y = np.asarray(Y, dtype=float)
    n = Y.shape[0]
    if Y.shape[1] < 2:
        raise ValueError("need at least two signal columns")
    if k_max is None:
        k_max = max(n // 2, 1)
    k_min = max(k_min, 1)
    k_max = min(k_max, n - 1)
    if k_min > k_max:
        raise ValueError(f"empty search range [{k_min}, {k_max}]")
    eig = np.linalg.eigvalsh(_second_moment(Y, center=False))[::-1]
    eig = np.maximum(eig, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        gaps = np.log(eig[k_min - 1 : k_max]) - np.log(eig[k_min : k_max + 1])
    gaps = np.nan_to_num(gaps, nan=0.0, posinf=np.inf, neginf=0.0)
    return k_min + int(np.argmax(gaps))


def classify_filter_strength(Y: np.ndarray, tau: float = 0.25) -> FilterStrength:
    """Declare the hidden filter strong low-pass when the second moment is
    approximately rank one, i.e. its eigenvalue ratio lam2/lam1 < tau."""
    if np.asarray(Y).shape[1] < 2:
        raise ValueError("need at least two signal columns")
    eig = np.linalg.eigvalsh(_second_moment(Y, center=False))
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = eig[-2] / eig[-1]
    return FilterStrength.STRONG if ratio < tau else FilterStrength.GENERAL


def result_to_json(result: DetectionResult) -> str:
    return json.dumps(
        {
            "method": result.method_tag,
            "scores": [float(s) for s in result.scores],
            "ranking": [int(i) for i in result.ranking],
            "top_c": sorted(int(i) for i in result.top_c),
        },
        indent=2,
    )


def result_from_json(text: str) -> DetectionResult:
    data = json.loads(text)
    return DetectionResult(
        scores=np.asarray(data["scores"], dtype=float),
        ranking=np.asarray(data["ranking"], dtype=int),
        top_c=frozenset(data["top_c"]),
        method_tag=data["method"],
    )
