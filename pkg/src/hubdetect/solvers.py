"""Optimization machinery: simplex projection, sparse NMF by alternating
projected gradient descent, least-squares factor refit, and robust PCA by
alternating proximal minimization.

The NMF criterion is

    min  0.5 ||Y - B Z||_F^2 + lambda_b * sum(B)
    s.t. B >= 0,  Z >= 0,  every row of Z sums to 1,

and the RPCA criterion is

    min  ||H - L - S||_F^2 + lambda_l ||L||_* + lambda_s ||vec(S)||_1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "SolverDivergenceError",
    "project_simplex_rows",
    "NmfConfig",
    "NmfSolution",
    "nmf_pgd",
    "refit_h",
    "RpcaConfig",
    "RpcaSolution",
    "rpca",
    "soft_threshold",
    "svt",
]


class SolverDivergenceError(RuntimeError):
    """Objective became non-finite (step parameters too aggressive)."""


def project_simplex_rows(M: np.ndarray) -> np.ndarray:
    """Euclidean projection of every row onto the probability simplex.

    Sort-and-threshold algorithm, vectorized over rows: O(k m log m) for a
    k x m input.  Idempotent and non-expansive.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    k, m = M.shape
    u = np.sort(M, axis=1)[:, ::-1]
    css = np.cumsum(u, axis=1)
    j = np.arange(1, m + 1)
    positive = u - (css - 1.0) / j > 0
    rho = m - np.argmax(positive[:, ::-1], axis=1)  # last True index, 1-based
    theta = (css[np.arange(k), rho - 1] - 1.0) / rho
    return np.maximum(M - theta[:, None], 0.0)


def _psd_spectral_norm(G: np.ndarray) -> float:
    """Top eigenvalue of a PSD Gram matrix (its spectral norm).

    Exact symmetric eigensolve; at k <= 64 this is cheaper than running a
    power iteration to comparable accuracy, and it sits in the inner loop of
    the NMF solver.
    """
    return float(np.linalg.eigvalsh(G)[-1])


@dataclass
class NmfConfig:
    """Settings for :func:`nmf_pgd`.

    ``lambda_b = None`` resolves to ``0.001 * m`` at solve time.  ``step_a``
    and ``step_b`` are the step-size numerators in (0, 1]; ``delta_b`` and
    ``delta_z`` are the step floors (never binding at experiment scale).
    """

    k: int
    lambda_b: Optional[float] = None
    step_a: float = 0.1
    step_b: float = 0.1
    delta_b: float = 1e-8
    delta_z: float = 1e-8
    max_iters: int = 10_000
    seed: int = 0
    trace_path: Optional[str] = None

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.lambda_b is not None and self.lambda_b < 0:
            raise ValueError(f"lambda_b must be >= 0, got {self.lambda_b}")
        for name, s in (("step_a", self.step_a), ("step_b", self.step_b)):
            if not 0 < s <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {s}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass(frozen=True)
class NmfSolution:
    """Factor estimates with the per-iteration objective values.

    ``B_hat >= 0`` elementwise, ``Z_hat`` rows lie on the simplex, and
    ``objective_trace`` (length ``max_iters + 1``, including the initial
    point) is non-increasing.
    """

    B_hat: np.ndarray
    Z_hat: np.ndarray
    objective_trace: np.ndarray


def _dump_trace(path: str, trace) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "objective"])
        for t, f in enumerate(trace):
            writer.writerow([t, f"{f:.17g}"])


def nmf_pgd(
    Y: np.ndarray,
    cfg: NmfConfig,
    on_iteration: Optional[Callable[[int, np.ndarray, np.ndarray], None]] = None,
) -> NmfSolution:
    """Alternating projected gradient descent on the sparse NMF criterion.

    Both factors start i.i.d. uniform on [0, 1] (rows of the right factor
    normalized onto the simplex) and take one projected gradient step per
    block per iteration:

        B <- (B - alpha * ((B Z - Y) Z^T + lambda_b))_+
        Z <- P_simplex(Z - beta * B_new^T (B_new Z - Y))

    with adaptive steps ``alpha = max(delta_b, a / ||Z^T Z||)`` and
    ``beta = max(delta_z, b / ||B_new^T B_new||)`` (spectral norms taken on
    the k x k Gram matrices).  The objective descends monotonically; a
    non-finite value aborts with the iteration index.

    ``on_iteration(t, B, Z)`` is invoked with the current factors after
    every iteration (test instrumentation / progress hook).
    """
    Y = np.asarray(Y, dtype=float)
    n, m = Y.shape
    lam = 0.001 * m if cfg.lambda_b is None else cfg.lambda_b

    rng = np.random.default_rng(cfg.seed)
    B = rng.uniform(size=(n, cfg.k))
    Z = rng.uniform(size=(cfg.k, m))
    row_sums = Z.sum(axis=1, keepdims=True)
    Z = np.where(row_sums > 0, Z / np.where(row_sums > 0, row_sums, 1.0), 1.0 / m)

    R = B @ Z - Y
    trace = np.empty(cfg.max_iters + 1)
    trace[0] = 0.5 * float(np.vdot(R, R)) + lam * float(B.sum())

    for t in range(cfg.max_iters):
        alpha = max(cfg.delta_b, cfg.step_a / max(_psd_spectral_norm(Z @ Z.T), 1e-300))
        B = np.maximum(B - alpha * (R @ Z.T + lam), 0.0)

        gram_b = B.T @ B
        beta = max(cfg.delta_z, cfg.step_b / max(_psd_spectral_norm(gram_b), 1e-300))
        grad_z = gram_b @ Z
        grad_z -= B.T @ Y
        Z = project_simplex_rows(Z - beta * grad_z)

        np.matmul(B, Z, out=R)
        R -= Y
        f = 0.5 * float(np.vdot(R, R)) + lam * float(B.sum())
        if not math.isfinite(f):
            raise SolverDivergenceError(f"objective became non-finite at iteration {t}")
        trace[t + 1] = f
        if on_iteration is not None:
            on_iteration(t, B, Z)

    if cfg.trace_path is not None:
        _dump_trace(cfg.trace_path, trace)
    return NmfSolution(B_hat=B, Z_hat=Z, objective_trace=trace)


def refit_h(Y: np.ndarray, Z_hat: np.ndarray) -> np.ndarray:
    """Least-squares refit ``argmin_H ||Y - H Z_hat||_F``.

    Returns the minimum-Frobenius-norm solution when ``Z_hat`` is
    rank-deficient; the residual is orthogonal to the row space of ``Z_hat``.
    """
    Y = np.asarray(Y, dtype=float)
    Z_hat = np.asarray(Z_hat, dtype=float)
    Ht, *_ = np.linalg.lstsq(Z_hat.T, Y.T, rcond=None)
    return Ht.T


def soft_threshold(M: np.ndarray, tau: float) -> np.ndarray:
    """Elementwise ``sign(x) * max(|x| - tau, 0)``."""
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    M = np.asarray(M, dtype=float)
    return np.sign(M) * np.maximum(np.abs(M) - tau, 0.0)


def svt(M: np.ndarray, tau: float) -> np.ndarray:
    """Singular value thresholding: soft-threshold the singular values of M."""
    return _svt(np.asarray(M, dtype=float), tau)[0]


def _svt(M: np.ndarray, tau: float) -> tuple[np.ndarray, float]:
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    return (U * s) @ Vt, float(s.sum())


@dataclass
class RpcaConfig:
    """Settings for :func:`rpca`.

    ``lambda_s = None`` resolves to ``0.2 + 2 / sqrt(k)`` with ``k`` the
    column count of the input.  Iteration stops when the relative objective
    change falls below ``tol``.
    """

    lambda_l: float = 0.2
    lambda_s: Optional[float] = None
    tol: float = 1e-6
    max_iters: int = 500
    trace_path: Optional[str] = None

    def __post_init__(self) -> None:
        if self.lambda_l <= 0:
            raise ValueError(f"lambda_l must be positive, got {self.lambda_l}")
        if self.lambda_s is not None and self.lambda_s <= 0:
            raise ValueError(f"lambda_s must be positive, got {self.lambda_s}")


@dataclass(frozen=True)
class RpcaSolution:
    L_hat: np.ndarray
    S_hat: np.ndarray
    objective_trace: np.ndarray


def rpca(H: np.ndarray, cfg: Optional[RpcaConfig] = None) -> RpcaSolution:
    """Low-rank plus sparse split by exact two-block alternating minimization.

    Each block has a closed-form proximal solution, so the convex objective
    decreases at every step:

        S <- soft_threshold(H - L, lambda_s / 2)
        L <- svt(H - S, lambda_l / 2)
    """
    cfg = cfg or RpcaConfig()
    H = np.asarray(H, dtype=float)
    lam_s = cfg.lambda_s if cfg.lambda_s is not None else 0.2 + 2.0 / math.sqrt(H.shape[1])

    L = np.zeros_like(H)
    S = np.zeros_like(H)
    f_prev = float(np.vdot(H, H))
    trace = [f_prev]
    for _ in range(cfg.max_iters):
        S = soft_threshold(H - L, lam_s / 2.0)
        L, nuclear = _svt(H - S, cfg.lambda_l / 2.0)
        R = H - L - S
        f = float(np.vdot(R, R)) + cfg.lambda_l * nuclear + lam_s * float(np.abs(S).sum())
        trace.append(f)
        if abs(f_prev - f) <= cfg.tol * max(f_prev, 1e-300):
            break
        f_prev = f

    if cfg.trace_path is not None:
        _dump_trace(cfg.trace_path, trace)
    return RpcaSolution(L_hat=L, S_hat=S, objective_trace=np.asarray(trace))
