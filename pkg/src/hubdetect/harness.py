"""Monte-Carlo experiment runner, detection metrics, and real-data protocol.

Trials are embarrassingly parallel: every trial's seed is derived from
``(base_seed, sweep_value, trial_index)`` alone, so aggregates are invariant
to execution order and to the set of detectors being run.
"""

from __future__ import annotations

import csv
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import filters
from .detectors import (
    detect_knn_baseline,
    detect_pca,
    detect_rpca_semiblind,
    detect_two_stage,
    top_c_frequencies,
)
from .graph import (
    BaParams,
    CpParams,
    Graph,
    eigencentrality,
    generate_ba,
    generate_cp,
    load_adjacency_csv,
    load_edgelist,
    top_c_nodes,
)
from .seeding import derive_seed
from .signals import ExcitationParams, generate_dataset
from .solvers import NmfConfig, RpcaConfig

__all__ = [
    "error_rate",
    "ExperimentConfig",
    "SweepCell",
    "BenchResult",
    "run_sweep",
    "correlation_score",
    "EvalReport",
    "eval_real",
    "consistency_distance",
    "WORKERS_ENV_VAR",
]

WORKERS_ENV_VAR = "HUBDETECT_WORKERS"

KNOWN_DETECTORS = ("pca", "rpca", "two-stage", "knn")


def error_rate(true_core: frozenset[int], detected: frozenset[int], c: int) -> float:
    """Fraction of true central nodes missed by the detected top-c set.

    This is one minus the average top-c overlap fraction, so that perfect
    detection scores 0 and lower is better on every benchmark curve.
    """
    true_core, detected = frozenset(true_core), frozenset(detected)
    if len(true_core) != c or len(detected) != c:
        raise ValueError(
            f"both sets must have size c={c}, got {len(true_core)} and {len(detected)}"
        )
    return 1.0 - len(true_core & detected) / c


@dataclass
class ExperimentConfig:
    """One synthetic benchmark: graph model, filter, excitation, sweep, detectors.

    ``sweep_var`` is one of ``k``, ``p1``, ``n``, ``m``; ``sweep_values``
    lists the values to benchmark.  ``lambda_b = None`` resolves to
    ``0.001 * m`` and ``lambda_s = None`` to ``0.2 + 2 / sqrt(k)`` per trial.
    ``knn = None`` resolves to ``ceil(0.1 * n)``.

    ``truth`` picks the ground-truth central set scored against:
    ``"eigencentrality"`` (default) takes the top-c of the drawn instance's
    eigen-centrality; ``"planted"`` takes the core block of a core-periphery
    draw (requires ``core_size == c``).  The two coincide only when the core
    block clearly dominates the spectrum.
    """

    graph_kind: str = "cp"  # "cp" | "ba" | "file"
    n: int = 100
    core_size: int = 10
    p1: float = 0.4
    p2: float = 0.05
    m_attach: int = 10
    graph_path: Optional[str] = None

    filter_spec: str = "iir:0.02"

    k: int = 40
    b_density: float = 0.1
    z_density: float = 0.6
    value_range: tuple[float, float] = (0.1, 1.0)

    m: int = 200
    sigma2: float = 0.01
    c: int = 10

    sweep_var: str = "k"
    sweep_values: Sequence = (40,)
    detectors: Sequence[str] = ("pca", "rpca", "two-stage")
    trials: int = 100
    base_seed: int = 0

    step_a: float = 0.1
    step_b: float = 0.1
    nmf_iters: int = 10_000
    lambda_b: Optional[float] = None
    lambda_l: float = 0.2
    lambda_s: Optional[float] = None
    restarts: int = 1
    knn: Optional[int] = None
    truth: str = "eigencentrality"

    out: Optional[str] = None

    def __post_init__(self) -> None:
        if self.sweep_var not in ("k", "p1", "n", "m"):
            raise ValueError(f"unknown sweep variable {self.sweep_var!r}")
        if self.truth not in ("eigencentrality", "planted"):
            raise ValueError(f"unknown truth policy {self.truth!r}")
        if self.truth == "planted" and (self.graph_kind != "cp" or self.core_size != self.c):
            raise ValueError("truth='planted' needs a cp graph with core_size == c")
        if len(self.sweep_values) == 0:
            raise ValueError("sweep_values must be nonempty")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        unknown = set(self.detectors) - set(KNOWN_DETECTORS)
        if unknown:
            raise ValueError(f"unknown detectors {sorted(unknown)}; known: {KNOWN_DETECTORS}")

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        """Build from a parsed TOML/JSON mapping with optional sections
        ``graph``, ``filter``, ``excitation``, ``sweep``, ``nmf``, ``rpca``."""
        kw: dict = {}
        graph = data.get("graph", {})
        for src, dst in (("kind", "graph_kind"), ("n", "n"), ("core_size", "core_size"),
                         ("p1", "p1"), ("p2", "p2"), ("m_attach", "m_attach"),
                         ("path", "graph_path")):
            if src in graph:
                kw[dst] = graph[src]
        if "filter" in data:
            kw["filter_spec"] = data["filter"]["spec"]
        exc = data.get("excitation", {})
        for name in ("k", "b_density", "z_density"):
            if name in exc:
                kw[name] = exc[name]
        if "value_range" in exc:
            kw["value_range"] = tuple(exc["value_range"])
        sweep = data.get("sweep", {})
        if "var" in sweep:
            kw["sweep_var"] = sweep["var"]
        if "values" in sweep:
            kw["sweep_values"] = tuple(sweep["values"])
        nmf = data.get("nmf", {})
        for src, dst in (("a", "step_a"), ("b", "step_b"), ("iters", "nmf_iters"),
                         ("lambda_b", "lambda_b")):
            if src in nmf:
                kw[dst] = nmf[src]
        rp = data.get("rpca", {})
        for name in ("lambda_l", "lambda_s"):
            if name in rp:
                kw[name] = rp[name]
        for name in ("m", "sigma2", "c", "trials", "base_seed", "restarts", "knn",
                     "truth", "out"):
            if name in data:
                kw[name] = data[name]
        if "detectors" in data:
            kw["detectors"] = tuple(data["detectors"])
        return cls(**kw)


@dataclass(frozen=True)
class SweepCell:
    """Aggregate for one (sweep value, detector) pair."""

    sweep_value: object
    detector: str
    mean_error: float
    std_error: float
    trials: int
    failures: int
    seconds: float


@dataclass(frozen=True)
class BenchResult:
    sweep_var: str
    cells: tuple[SweepCell, ...]

    def cell(self, sweep_value, detector: str) -> SweepCell:
        for cell in self.cells:
            if cell.sweep_value == sweep_value and cell.detector == detector:
                return cell
        raise KeyError((sweep_value, detector))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["sweep_var", "sweep_value", "detector", "mean_error", "std_error",
                 "trials", "failures", "seconds"]
            )
            for cell in self.cells:
                writer.writerow(
                    [self.sweep_var, cell.sweep_value, cell.detector,
                     f"{cell.mean_error:.17g}", f"{cell.std_error:.17g}",
                     cell.trials, cell.failures, f"{cell.seconds:.3f}"]
                )


def _apply_sweep(cfg: ExperimentConfig, value) -> ExperimentConfig:
    if cfg.sweep_var == "k":
        return replace(cfg, k=int(value))
    if cfg.sweep_var == "p1":
        return replace(cfg, p1=float(value))
    if cfg.sweep_var == "n":
        return replace(cfg, n=int(value))
    return replace(cfg, m=int(value))


def _trial_graph(cfg: ExperimentConfig, seed: int) -> tuple[Graph, frozenset[int]]:
    if cfg.graph_kind == "cp":
        g = generate_cp(CpParams(n=cfg.n, p1=cfg.p1, p2=cfg.p2, core_size=cfg.core_size, seed=seed))
        if cfg.truth == "planted":
            return g, frozenset(range(cfg.core_size))
    elif cfg.graph_kind == "ba":
        g = generate_ba(BaParams(n=cfg.n, m_attach=cfg.m_attach, seed=seed))
    elif cfg.graph_kind == "file":
        path = cfg.graph_path
        if path is None:
            raise ValueError("graph_kind='file' requires graph_path")
        g = load_adjacency_csv(path) if str(path).endswith(".csv") else load_edgelist(path)
    else:
        raise ValueError(f"unknown graph kind {cfg.graph_kind!r}")
    return g, top_c_nodes(eigencentrality(g), cfg.c)


def run_trial(cfg: ExperimentConfig, sweep_value, trial_index: int) -> dict:
    """One Monte-Carlo trial; returns per-detector error rates and timings.

    Data generation depends only on ``(base_seed, sweep_value, trial_index)``
    so adding or removing detectors never changes the data.  Detector
    failures are captured, not raised.
    """
    eff = _apply_sweep(cfg, sweep_value)
    trial_seed = derive_seed(cfg.base_seed, sweep_value, trial_index)
    g, true_core = _trial_graph(eff, derive_seed(trial_seed, "graph"))
    filt = filters.parse_filter_spec(eff.filter_spec)
    exc = ExcitationParams(
        k=eff.k,
        b_density=eff.b_density,
        z_density=eff.z_density,
        value_range=eff.value_range,
        seed=derive_seed(trial_seed, "excitation"),
    )
    dataset = generate_dataset(g, filt, exc, eff.m, eff.sigma2, core_set=true_core)
    Y = dataset.Y

    rpca_cfg = RpcaConfig(lambda_l=eff.lambda_l, lambda_s=eff.lambda_s)
    out: dict = {"errors": {}, "seconds": {}, "failures": {}}
    for name in eff.detectors:
        t0 = time.perf_counter()
        try:
            if name == "pca":
                result = detect_pca(Y, eff.c)
            elif name == "rpca":
                result = detect_rpca_semiblind(Y, dataset.ground_truth.Z, rpca_cfg, eff.c)
            elif name == "two-stage":
                nmf_cfg = NmfConfig(
                    k=eff.k,
                    lambda_b=eff.lambda_b,
                    step_a=eff.step_a,
                    step_b=eff.step_b,
                    max_iters=eff.nmf_iters,
                    seed=derive_seed(trial_seed, "nmf"),
                )
                result = detect_two_stage(Y, nmf_cfg, rpca_cfg, eff.c, restarts=eff.restarts)
            else:
                knn = eff.knn if eff.knn is not None else math.ceil(0.1 * g.n)
                result = detect_knn_baseline(Y, knn, eff.c)
            out["errors"][name] = error_rate(true_core, result.top_c, eff.c)
        except Exception as exc_info:  # per-trial failures never abort a sweep
            out["failures"][name] = f"{type(exc_info).__name__}: {exc_info}"
        out["seconds"][name] = time.perf_counter() - t0
    return out


def _run_trial_task(args) -> tuple[int, int, dict]:
    cfg, value_idx, trial_idx = args
    return value_idx, trial_idx, run_trial(cfg, cfg.sweep_values[value_idx], trial_idx)


def run_sweep(cfg: ExperimentConfig, workers: Optional[int] = None) -> BenchResult:
    """Run ``trials`` Monte-Carlo trials per sweep value and aggregate.

    ``workers`` defaults to the ``HUBDETECT_WORKERS`` environment variable or
    the machine's CPU count; results are identical for any worker count.
    """
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV_VAR, os.cpu_count() or 1))
    tasks = [
        (cfg, vi, ti) for vi in range(len(cfg.sweep_values)) for ti in range(cfg.trials)
    ]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_run_trial_task, tasks, chunksize=1))
    else:
        raw = [_run_trial_task(t) for t in tasks]
    raw.sort(key=lambda r: (r[0], r[1]))

    cells = []
    for vi, value in enumerate(cfg.sweep_values):
        per_detector: dict[str, list[float]] = {name: [] for name in cfg.detectors}
        seconds = {name: 0.0 for name in cfg.detectors}
        failures = {name: 0 for name in cfg.detectors}
        for rvi, _, res in raw:
            if rvi != vi:
                continue
            for name in cfg.detectors:
                if name in res["errors"]:
                    per_detector[name].append(res["errors"][name])
                elif name in res["failures"]:
                    failures[name] += 1
                seconds[name] += res["seconds"].get(name, 0.0)
        for name in cfg.detectors:
            errs = np.asarray(per_detector[name])
            if failures[name]:
                warnings.warn(
                    f"{failures[name]} failed trial(s) excluded for detector "
                    f"{name!r} at {cfg.sweep_var}={value}",
                    stacklevel=2,
                )
            cells.append(
                SweepCell(
                    sweep_value=value,
                    detector=name,
                    mean_error=float(errs.mean()) if errs.size else float("nan"),
                    std_error=float(errs.std(ddof=1)) if errs.size > 1 else 0.0,
                    trials=int(errs.size),
                    failures=failures[name],
                    seconds=seconds[name],
                )
            )
    result = BenchResult(sweep_var=cfg.sweep_var, cells=tuple(cells))
    if cfg.out:
        result.write_csv(cfg.out)
    return result


def correlation_score(x: np.ndarray, g: np.ndarray) -> float:
    """Normalized inner product ``<x, g> / (||x|| ||g||)``.

    Lies in [0, 1] for nonnegative inputs; raises on zero-norm vectors.
    """
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    nx, ng = np.linalg.norm(x), np.linalg.norm(g)
    if nx == 0 or ng == 0:
        raise ValueError("correlation score undefined for zero-norm vectors")
    return float(x @ g) / (nx * ng)


@dataclass(frozen=True)
class EvalReport:
    """Per-node outcome of the train/test evaluation protocol.

    ``rows`` holds ``(node, frequency, score)`` for the selected top-c nodes,
    ordered by descending frequency (ties by ascending node index);
    ``mean_score`` / ``std_score`` summarize the scores (population std).
    """

    rows: tuple[tuple[int, int, float], ...]
    mean_score: float
    std_score: float
    top_c: frozenset[int] = field(default_factory=frozenset)


def eval_real(
    Y: np.ndarray,
    g_series: np.ndarray,
    k: int,
    c: int = 10,
    split: float = 0.8,
    restarts: int = 100,
    method: str = "two-stage",
    shift_min: bool = False,
    nmf_cfg: Optional[NmfConfig] = None,
    rpca_cfg: Optional[RpcaConfig] = None,
    seed: int = 0,
) -> EvalReport:
    """Fit detectors on the first ``split`` fraction of columns, then score
    each selected node's test-block series against the global outcome ``g``.

    The two-stage detector is rerun ``restarts`` times from fresh random
    initializations; nodes are ranked by top-c membership frequency.
    ``shift_min=True`` subtracts the global minimum first (nonnegativity
    shift for return-style data).
    """
    if not 0 < split < 1:
        raise ValueError(f"split must lie in (0, 1), got {split}")
    Y = np.asarray(Y, dtype=float)
    if shift_min:
        Y = Y - Y.min()
    m = Y.shape[1]
    m_train = int(math.floor(split * m))
    if m_train < 1 or m_train >= m:
        raise ValueError(f"split {split} leaves an empty train or test block for m={m}")
    Y_train, Y_test = Y[:, :m_train], Y[:, m_train:]
    g_series = np.asarray(g_series, dtype=float).ravel()
    if g_series.shape[0] != Y_test.shape[1]:
        raise ValueError(
            f"g has length {g_series.shape[0]}, test block has {Y_test.shape[1]} columns"
        )

    if method == "two-stage":
        if nmf_cfg is None:
            nmf_cfg = NmfConfig(k=k, seed=seed)
        freq = top_c_frequencies(Y_train, nmf_cfg, rpca_cfg, c, restarts)
    elif method == "pca":
        freq = np.zeros(Y.shape[0])
        for node in detect_pca(Y_train, c).top_c:
            freq[node] = restarts
    elif method == "knn":
        freq = np.zeros(Y.shape[0])
        knn = math.ceil(0.1 * Y.shape[0])
        for node in detect_knn_baseline(Y_train, knn, c).top_c:
            freq[node] = restarts
    else:
        raise ValueError(f"unknown eval method {method!r}")

    top = top_c_nodes(freq, c)
    ordered = sorted(top, key=lambda i: (-freq[i], i))
    rows = tuple(
        (int(i), int(freq[i]), correlation_score(Y_test[i], g_series)) for i in ordered
    )
    scores = np.asarray([r[2] for r in rows])
    return EvalReport(
        rows=rows,
        mean_score=float(scores.mean()),
        std_score=float(scores.std()),
        top_c=frozenset(top),
    )


def consistency_distance(
    Y: np.ndarray,
    subset_fraction: float,
    trials: int = 100,
    restarts: int = 100,
    c: int = 10,
    k: Optional[int] = None,
    nmf_cfg: Optional[NmfConfig] = None,
    rpca_cfg: Optional[RpcaConfig] = None,
    seed: int = 0,
) -> float:
    """Stability of top-c selection under random column subsampling.

    Builds the top-c membership distribution over ``restarts`` restarts on
    the full data (``mu_full``) and on ``trials`` random column subsets of
    the given fraction (``mu_hat``), each normalized to sum one over nodes,
    and returns the average L1 distance ``E ||mu_hat - mu_full||_1``.
    """
    if not 0 < subset_fraction <= 1:
        raise ValueError(f"subset_fraction must lie in (0, 1], got {subset_fraction}")
    Y = np.asarray(Y, dtype=float)
    m = Y.shape[1]
    n_cols = max(1, round(subset_fraction * m))
    if nmf_cfg is None:
        if k is None:
            raise ValueError("need k (or an explicit nmf_cfg)")
        nmf_cfg = NmfConfig(k=k, seed=seed)

    def distribution(data: np.ndarray, cfg: NmfConfig) -> np.ndarray:
        freq = top_c_frequencies(data, cfg, rpca_cfg, c, restarts)
        return freq / freq.sum()

    mu_full = distribution(Y, nmf_cfg)
    rng = np.random.default_rng(derive_seed(nmf_cfg.seed, "subsets"))
    total = 0.0
    for _ in range(trials):
        cols = np.sort(rng.choice(m, size=n_cols, replace=False))
        total += float(np.abs(distribution(Y[:, cols], nmf_cfg) - mu_full).sum())
    return total / trials
