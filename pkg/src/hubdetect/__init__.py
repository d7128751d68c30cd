"""Blind detection of central graph nodes from low-pass filtered signals."""

from .graph import (
    BaParams,
    CpParams,
    Graph,
    GraphGenerationError,
    Spectrum,
    eigencentrality,
    generate_ba,
    generate_cp,
    spectral_gap,
    top_c_nodes,
)
from .filters import (
    DiffusionFilter,
    FilterDomainError,
    FrequencyProfile,
    GraphFilter,
    IirFilter,
    PolynomialFilter,
    apply,
    boost,
    frequency_profile,
    optimal_rho,
    parse_filter_spec,
    pca_error_bound,
    sparse_ratio_bound,
)
from .signals import (
    ExcitationParams,
    SignalDataset,
    generate_dataset,
    generate_excitation,
    iterate_dynamics,
    opinion_steady_state,
)
from .solvers import (
    NmfConfig,
    NmfSolution,
    RpcaConfig,
    RpcaSolution,
    SolverDivergenceError,
    nmf_pgd,
    project_simplex_rows,
    refit_h,
    rpca,
    soft_threshold,
    svt,
)
from .detectors import (
    DetectionResult,
    FilterStrength,
    classify_filter_strength,
    detect_knn_baseline,
    detect_pca,
    detect_rpca_semiblind,
    detect_two_stage,
    estimate_rank,
)
from .harness import (
    BenchResult,
    ExperimentConfig,
    consistency_distance,
    correlation_score,
    error_rate,
    eval_real,
    run_sweep,
)
from .seeding import derive_seed

__version__ = "0.1.0"
