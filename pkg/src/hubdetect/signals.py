"""Synthetic excitation and observed graph-signal generation.

Observations follow ``Y = H(A) B Z + W`` with a sparse nonnegative basis
``B``, nonnegative latent parameters ``Z``, and i.i.d. Gaussian noise ``W``.
Steady-state averaging dynamics are included as a signal-generator variant.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import filters
from .graph import Graph
from .seeding import derive_seed

__all__ = [
    "ExcitationParams",
    "GroundTruth",
    "SignalDataset",
    "generate_excitation",
    "generate_dataset",
    "opinion_steady_state",
    "iterate_dynamics",
    "save_dataset",
    "load_dataset",
    "load_metadata",
]


@dataclass(frozen=True)
class ExcitationParams:
    """Sparsity pattern and magnitudes of the excitation factors.

    ``B`` (n x k) and ``Z`` (k x m) get i.i.d. Bernoulli masks with the given
    densities; nonzero magnitudes are uniform on ``value_range``.
    """

    k: int
    b_density: float = 0.1
    z_density: float = 0.6
    value_range: tuple[float, float] = (0.1, 1.0)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        for name, d in (("b_density", self.b_density), ("z_density", self.z_density)):
            if not 0 <= d <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {d}")
        lo, hi = self.value_range
        if not 0 < lo <= hi:
            raise ValueError(f"value_range must be positive, got {self.value_range}")


@dataclass(frozen=True)
class GroundTruth:
    B: np.ndarray
    Z: np.ndarray
    graph: Graph
    filt: filters.GraphFilter
    core_set: Optional[frozenset[int]]
    sigma2: float


@dataclass(frozen=True)
class SignalDataset:
    """Observation matrix ``Y`` (n x m) plus optional generation ground truth."""

    Y: np.ndarray
    ground_truth: Optional[GroundTruth] = None


def _masked_uniform(rng: np.random.Generator, shape, density, value_range) -> np.ndarray:
    mask = rng.uniform(size=shape) < density
    values = rng.uniform(value_range[0], value_range[1], size=shape)
    return np.where(mask, values, 0.0)


def generate_excitation(
    n: int,
    m: int,
    params: ExcitationParams,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw the factor pair ``(B, Z)``; deterministic given ``params.seed``.

    An all-zero ``B`` (essentially impossible at the default densities) is
    redrawn once; if still degenerate, or if ``Z`` ends up all-zero, a warning
    flags the dataset as degenerate rather than failing.
    """
    if params.k > n:
        raise ValueError(f"excitation rank k={params.k} exceeds n={n}")
    if rng is None:
        rng = np.random.default_rng(params.seed)
    B = _masked_uniform(rng, (n, params.k), params.b_density, params.value_range)
    if not B.any():
        warnings.warn("all-zero basis B drawn; regenerating once", stacklevel=2)
        B = _masked_uniform(rng, (n, params.k), params.b_density, params.value_range)
        if not B.any():
            warnings.warn("excitation basis B is all-zero (degenerate)", stacklevel=2)
    Z = _masked_uniform(rng, (params.k, m), params.z_density, params.value_range)
    if not Z.any():
        warnings.warn("latent parameter matrix Z is all-zero (degenerate)", stacklevel=2)
    return B, Z


def generate_dataset(
    g: Graph,
    filt: filters.GraphFilter,
    params: ExcitationParams,
    m: int,
    sigma2: float,
    core_set: Optional[frozenset[int]] = None,
) -> SignalDataset:
    """Generate ``Y = H(A) B Z + W`` with ``W ~ N(0, sigma2 I)`` i.i.d.

    The excitation and noise use independent sub-streams derived from
    ``params.seed``, so regenerating with the same seed is bit-reproducible
    and trials with distinct seeds are independent.
    """
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be nonnegative, got {sigma2}")
    rng_exc = np.random.default_rng(params.seed)
    rng_noise = np.random.default_rng(derive_seed(params.seed, "noise"))
    B, Z = generate_excitation(g.n, m, params, rng=rng_exc)
    Y = filters.apply(filt, g, B @ Z)
    if sigma2 > 0:
        Y = Y + rng_noise.normal(scale=np.sqrt(sigma2), size=Y.shape)
    truth = GroundTruth(B=B, Z=Z, graph=g, filt=filt, core_set=core_set, sigma2=sigma2)
    return SignalDataset(Y=Y, ground_truth=truth)


def opinion_steady_state(g: Graph, B: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Steady-state averaging outcome ``(I - A)^{-1} B Z``.

    The adjacency must have spectral radius below one (rescale beforehand);
    this is the unit-coefficient resolvent filter applied to ``B Z``.
    """
    if g.spectrum.eigenvalues[0] >= 1.0:
        raise ValueError("spectral radius of the adjacency must be < 1")
    return filters.apply(filters.IirFilter(1.0), g, np.asarray(B) @ np.asarray(Z))


def iterate_dynamics(g: Graph, x: np.ndarray, T: int) -> np.ndarray:
    """Run ``s_{t+1} = x + A s_t`` for ``T`` steps from the all-ones state.

    Converges geometrically to ``(I - A)^{-1} x`` when ``||A|| < 1``.
    """
    if T < 0:
        raise ValueError(f"T must be nonnegative, got {T}")
    A = g.adjacency
    s = np.ones(g.n)
    x = np.asarray(x, dtype=float)
    for _ in range(T):
        s = x + A @ s
    return s


def save_dataset(path, Y: np.ndarray, metadata: Optional[dict] = None) -> None:
    """Write ``Y`` as CSV (one row per node, 17 significant digits) plus an
    optional ``<path>.meta.json`` sidecar recording generation parameters."""
    np.savetxt(path, np.atleast_2d(Y), fmt="%.17g", delimiter=",")
    if metadata is not None:
        with open(f"{path}.meta.json", "w") as fh:
            json.dump(metadata, fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_dataset(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=","))


def load_metadata(path) -> dict:
    with open(f"{path}.meta.json") as fh:
        return json.load(fh)
