"""Graph filters, frequency responses, and low-pass ratio analysis.

A filter acts on node signals as ``V h(Lambda) V^T X`` where ``V, Lambda``
come from the adjacency eigendecomposition.  Filters are applied spectrally
rather than by matrix series so that infinite-order kinds (IIR, diffusion)
are exact and one eigendecomposition amortizes over many signal columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .graph import Graph, Spectrum

__all__ = [
    "PolynomialFilter",
    "IirFilter",
    "DiffusionFilter",
    "GraphFilter",
    "FrequencyProfile",
    "FilterDomainError",
    "parse_filter_spec",
    "filter_spec_string",
    "apply",
    "frequency_profile",
    "boost",
    "optimal_rho",
    "sparse_ratio_bound",
    "pca_error_bound",
]


class FilterDomainError(ValueError):
    """Filter is not defined (or not invertible) on the given spectrum."""


@dataclass(frozen=True)
class PolynomialFilter:
    """FIR filter ``h(lam) = sum_t coeffs[t] * lam**t``."""

    coeffs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.coeffs) < 1:
            raise ValueError("polynomial filter needs at least one coefficient")

    def response(self, lam: np.ndarray) -> np.ndarray:
        out = np.full_like(np.asarray(lam, dtype=float), self.coeffs[-1])
        for h in reversed(self.coeffs[:-1]):
            out = out * lam + h
        return out


@dataclass(frozen=True)
class IirFilter:
    """Resolvent filter ``h(lam) = 1 / (1 - c * lam)``.

    Only valid when ``c * lam1 < 1``, which also makes the response positive
    on the whole spectrum; checked at application time.
    """

    c: float

    def response(self, lam: np.ndarray) -> np.ndarray:
        return 1.0 / (1.0 - self.c * np.asarray(lam, dtype=float))


@dataclass(frozen=True)
class DiffusionFilter:
    """Heat-kernel filter ``h(lam) = exp(alpha * lam)``."""

    alpha: float

    def response(self, lam: np.ndarray) -> np.ndarray:
        return np.exp(self.alpha * np.asarray(lam, dtype=float))


GraphFilter = Union[PolynomialFilter, IirFilter, DiffusionFilter]


def parse_filter_spec(spec) -> GraphFilter:
    """Build a filter from ``"iir:0.02"`` style strings or config mappings.

    Mappings use ``{"kind": "iir"|"diffusion"|"poly", "param": value}`` where
    ``param`` is ``c``, ``alpha``, or the coefficient list respectively.
    """
    if isinstance(spec, (PolynomialFilter, IirFilter, DiffusionFilter)):
        return spec
    if isinstance(spec, str):
        kind, _, arg = spec.partition(":")
        if not arg:
            raise ValueError(f"filter spec {spec!r} needs a parameter after ':'")
        param = [float(x) for x in arg.split(",")] if kind == "poly" else float(arg)
    elif isinstance(spec, dict):
        kind, param = spec["kind"], spec["param"]
    else:
        raise TypeError(f"cannot interpret filter spec {spec!r}")
    if kind == "iir":
        return IirFilter(float(param))
    if kind == "diffusion":
        return DiffusionFilter(float(param))
    if kind == "poly":
        coeffs = tuple(float(x) for x in (param if isinstance(param, (list, tuple)) else [param]))
        return PolynomialFilter(coeffs)
    raise ValueError(f"unknown filter kind {kind!r}")


def filter_spec_string(filt: GraphFilter) -> str:
    if isinstance(filt, IirFilter):
        return f"iir:{filt.c:.17g}"
    if isinstance(filt, DiffusionFilter):
        return f"diffusion:{filt.alpha:.17g}"
    return "poly:" + ",".join(f"{h:.17g}" for h in filt.coeffs)


def _check_domain(filt: GraphFilter, eigenvalues: np.ndarray) -> None:
    if isinstance(filt, IirFilter) and filt.c * eigenvalues[0] >= 1.0:
        raise FilterDomainError(
            f"IIR filter needs c * lam1 < 1, got c={filt.c}, lam1={eigenvalues[0]}"
        )


@dataclass(frozen=True)
class FrequencyProfile:
    """Filter responses evaluated on a spectrum, plus the low-pass ratio.

    ``responses[i]`` pairs with ``eigenvalues[i]`` (descending order);
    ``eta = max_{j>=2} |h(lam_j)| / |h(lam_1)|`` and the filter is 1-low-pass
    on this spectrum exactly when ``eta < 1``.  ``eta`` is NaN when both the
    passband and stopband responses vanish.
    """

    eigenvalues: np.ndarray
    responses: np.ndarray
    eta: float


def _profile(filt: GraphFilter, eigenvalues: np.ndarray, rho: float = 0.0) -> FrequencyProfile:
    h = filt.response(eigenvalues) - rho
    passband = abs(h[0])
    stopband = float(np.max(np.abs(h[1:]))) if h.shape[0] > 1 else 0.0
    if passband == 0.0:
        eta = math.nan if stopband == 0.0 else math.inf
    else:
        eta = stopband / passband
    return FrequencyProfile(eigenvalues=eigenvalues, responses=h, eta=float(eta))


def apply(filt: GraphFilter, g: Graph, X: np.ndarray) -> np.ndarray:
    """Filter the columns of ``X``: returns ``V h(Lambda) V^T X``."""
    spec = g.spectrum
    _check_domain(filt, spec.eigenvalues)
    h = filt.response(spec.eigenvalues)
    V = spec.eigenvectors
    return V @ (h[:, None] * (V.T @ np.asarray(X, dtype=float)))


def frequency_profile(filt: GraphFilter, spectrum: Spectrum) -> FrequencyProfile:
    """Responses and low-pass ratio of ``filt`` on ``spectrum``."""
    _check_domain(filt, spectrum.eigenvalues)
    prof = _profile(filt, spectrum.eigenvalues)
    if abs(prof.responses[0]) == 0.0:
        raise FilterDomainError("passband response h(lam1) is zero")
    return prof


def boost(filt: GraphFilter, spectrum: Spectrum, rho: float) -> FrequencyProfile:
    """Profile of the spectrum-shifted filter with response ``h(lam) - rho``.

    For suitable ``rho > 0`` the shift strictly improves the low-pass ratio;
    a degenerate all-zero shifted response yields ``eta = NaN``.
    """
    if rho < 0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    _check_domain(filt, spectrum.eigenvalues)
    return _profile(filt, spectrum.eigenvalues, rho=rho)


def optimal_rho(filt: GraphFilter, spectrum: Spectrum) -> float:
    """Shift minimizing the worst relative response deviation ``|h(lam)/rho - 1|``.

    Equals ``(h(lam1) + min_{i>=2} h(lam_i)) / 2``.  Assumes the response is
    convex and nonnegative on ``[lam_n, lam_1]`` (the caller's responsibility;
    not validated here because convexity of an arbitrary response function
    cannot be checked from finitely many samples).
    """
    _check_domain(filt, spectrum.eigenvalues)
    h = filt.response(spectrum.eigenvalues)
    return float((h[0] + h[1:].min()) / 2.0)


def sparse_ratio_bound(profile: FrequencyProfile) -> float:
    """Upper bound on ``min_rho ||(H - rho I) B|| / (rho ||B||)``.

    Evaluates, from the profile alone,

        (1 - eta + d) / (1 + eta - d),   d = (max(h2, hn) - h_min) / h1,

    with ``h_min`` the smallest response over indices ``2..n``.  Valid for
    convex nonnegative responses; for a flat stopband it reduces to
    ``(1 - eta) / (1 + eta)``.
    """
    h = profile.responses
    if h.shape[0] < 2:
        raise ValueError("bound needs at least two spectrum points")
    h1 = h[0]
    d = (max(h[1], h[-1]) - h[1:].min()) / h1
    denom = 1.0 + profile.eta - d
    if denom <= 0:
        raise ValueError(f"bound denominator {denom} <= 0; response violates assumptions")
    return float((1.0 - profile.eta + d) / denom)


def pca_error_bound(g: Graph, filt: GraphFilter, B: np.ndarray) -> float:
    """Noiseless eigen-centrality error bound for the SVD of the filtered basis.

    Computes ``sqrt(2) * eta * ||V_{n-1}^T B q1|| / |v1^T B q1|`` where ``q1``
    is the top right singular vector of the filtered basis ``H B`` and
    ``V_{n-1}`` collects all adjacency eigenvectors but the first.
    """
    spec = g.spectrum
    profile = frequency_profile(filt, spec)
    HB = apply(filt, g, B)
    _, _, Vt = np.linalg.svd(HB, full_matrices=False)
    Bq = np.asarray(B, dtype=float) @ Vt[0]
    denom = abs(float(spec.eigenvectors[:, 0] @ Bq))
    if denom < 1e-12:
        raise ValueError("v1^T B q1 is numerically zero; bound is degenerate")
    num = float(np.linalg.norm(spec.eigenvectors[:, 1:].T @ Bq))
    return math.sqrt(2.0) * profile.eta * num / denom
