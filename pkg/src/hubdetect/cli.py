"""Command-line interface.

Subcommands: ``generate`` (synthetic datasets), ``detect`` (run one detector
on a CSV signal matrix), ``bench`` (Monte-Carlo sweeps from a TOML config),
and ``eval`` (train/test correlation protocol for real data).

Exit codes: 0 success, 1 input error, 2 solver failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import filters
from .detectors import (
    detect_knn_baseline,
    detect_pca,
    detect_rpca_semiblind,
    detect_two_stage,
    estimate_rank,
    result_to_json,
)
from .graph import (
    BaParams,
    CpParams,
    GraphGenerationError,
    eigencentrality,
    generate_ba,
    generate_cp,
    load_adjacency_csv,
    load_edgelist,
    top_c_nodes,
)
from .harness import ExperimentConfig, error_rate, eval_real, run_sweep
from .seeding import derive_seed
from .signals import ExcitationParams, generate_dataset, load_dataset, save_dataset
from .solvers import NmfConfig, RpcaConfig, SolverDivergenceError

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SOLVER = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hubdetect",
        description="Detect central nodes of a hidden graph from filtered graph signals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a synthetic signal dataset")
    gen.add_argument("--graph", required=True, choices=["cp", "ba", "file"])
    gen.add_argument("--n", type=int, default=100)
    gen.add_argument("--core-size", type=int, default=10)
    gen.add_argument("--p1", type=float, default=0.4)
    gen.add_argument("--p2", type=float, default=0.05)
    gen.add_argument("--m-attach", type=int, default=10)
    gen.add_argument("--graph-file", help="adjacency CSV or edge-list file for --graph file")
    gen.add_argument("--filter", required=True, help="iir:C | diffusion:A | poly:h0,h1,...")
    gen.add_argument("--k", type=int, required=True)
    gen.add_argument("--b-density", type=float, default=0.1)
    gen.add_argument("--z-density", type=float, default=0.6)
    gen.add_argument("--m", type=int, required=True)
    gen.add_argument("--sigma2", type=float, default=0.01)
    gen.add_argument("--c", type=int, default=10)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    det = sub.add_parser("detect", help="run a detector on a CSV signal matrix")
    det.add_argument("--method", required=True, choices=["pca", "two-stage", "rpca", "knn"])
    det.add_argument("--input", required=True, help="observations CSV, one row per node")
    det.add_argument("--z", help="latent parameter CSV (required by --method rpca)")
    det.add_argument("--c", type=int, required=True)
    det.add_argument("--k", type=int, help="excitation rank (two-stage); estimated if omitted")
    det.add_argument("--knn", type=int, help="neighbor count (default ceil(0.1 n))")
    det.add_argument("--restarts", type=int, default=1)
    det.add_argument("--nmf-iters", type=int, default=10_000)
    det.add_argument("--seed", type=int, default=0)
    det.add_argument("--out", help="result JSON path (default stdout)")

    bench = sub.add_parser("bench", help="run a Monte-Carlo sweep from a TOML config")
    bench.add_argument("--config", required=True)
    bench.add_argument("--out", required=True, help="curve-point CSV output")
    bench.add_argument("--workers", type=int, help="override worker count")

    ev = sub.add_parser("eval", help="train/test correlation protocol")
    ev.add_argument("--input", required=True, help="observations CSV")
    ev.add_argument("--g", required=True, help="global outcome series CSV (one column)")
    ev.add_argument("--split", type=float, default=0.8)
    ev.add_argument("--k", type=int, required=True)
    ev.add_argument("--c", type=int, default=10)
    ev.add_argument("--restarts", type=int, default=100)
    ev.add_argument("--method", default="two-stage", choices=["two-stage", "pca", "knn"])
    ev.add_argument("--shift-min", action="store_true",
                    help="subtract the global minimum to make the data nonnegative")
    ev.add_argument("--nmf-iters", type=int, default=10_000)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out", help="report JSON path (default stdout)")

    return parser


def _load_graph_file(path):
    return load_adjacency_csv(path) if str(path).endswith(".csv") else load_edgelist(path)


def _cmd_generate(args) -> int:
    if args.graph == "cp":
        g = generate_cp(CpParams(n=args.n, p1=args.p1, p2=args.p2,
                                 core_size=args.core_size, seed=derive_seed(args.seed, "graph")))
        core = frozenset(range(args.core_size))
    elif args.graph == "ba":
        g = generate_ba(BaParams(n=args.n, m_attach=args.m_attach,
                                 seed=derive_seed(args.seed, "graph")))
        core = top_c_nodes(eigencentrality(g), args.c)
    else:
        if not args.graph_file:
            raise ValueError("--graph file requires --graph-file")
        g = _load_graph_file(args.graph_file)
        core = top_c_nodes(eigencentrality(g), args.c)
    filt = filters.parse_filter_spec(args.filter)
    exc = ExcitationParams(k=args.k, b_density=args.b_density, z_density=args.z_density,
                           seed=derive_seed(args.seed, "excitation"))
    dataset = generate_dataset(g, filt, exc, args.m, args.sigma2, core_set=core)
    metadata = {
        "graph": args.graph,
        "n": g.n,
        "filter": args.filter,
        "k": args.k,
        "b_density": args.b_density,
        "z_density": args.z_density,
        "m": args.m,
        "sigma2": args.sigma2,
        "seed": args.seed,
        "core_set": sorted(core),
    }
    save_dataset(args.out, dataset.Y, metadata)
    print(f"wrote {args.out} ({g.n} nodes x {args.m} samples) and {args.out}.meta.json")
    return EXIT_OK


def _cmd_detect(args) -> int:
    Y = load_dataset(args.input)
    if args.method == "pca":
        result = detect_pca(Y, args.c)
    elif args.method == "rpca":
        if not args.z:
            raise ValueError("--method rpca requires --z")
        Z = load_dataset(args.z)
        result = detect_rpca_semiblind(Y, Z, RpcaConfig(), args.c)
    elif args.method == "two-stage":
        k = args.k if args.k is not None else estimate_rank(Y)
        cfg = NmfConfig(k=k, max_iters=args.nmf_iters, seed=args.seed)
        result = detect_two_stage(Y, cfg, RpcaConfig(), args.c, restarts=args.restarts)
    else:
        knn = args.knn if args.knn is not None else math.ceil(0.1 * Y.shape[0])
        result = detect_knn_baseline(Y, knn, args.c)
    text = result_to_json(result)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return EXIT_OK


def _cmd_bench(args) -> int:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(args.config, "rb") as fh:
        data = tomllib.load(fh)
    cfg = ExperimentConfig.from_mapping(data)
    result = run_sweep(cfg, workers=args.workers)
    result.write_csv(args.out)
    print(f"wrote {args.out}")
    for cell in result.cells:
        print(f"{result.sweep_var}={cell.sweep_value} {cell.detector}: "
              f"mean={cell.mean_error:.4f} std={cell.std_error:.4f} "
              f"trials={cell.trials} failures={cell.failures} ({cell.seconds:.1f}s)")
    return EXIT_OK


def _cmd_eval(args) -> int:
    Y = load_dataset(args.input)
    g_series = np.loadtxt(args.g, delimiter=",")
    nmf_cfg = NmfConfig(k=args.k, max_iters=args.nmf_iters, seed=args.seed)
    report = eval_real(
        Y, g_series, k=args.k, c=args.c, split=args.split, restarts=args.restarts,
        method=args.method, shift_min=args.shift_min, nmf_cfg=nmf_cfg, seed=args.seed,
    )
    payload = {
        "method": args.method,
        "rows": [{"node": n, "frequency": f, "corr_score": s} for n, f, s in report.rows],
        "mean_score": report.mean_score,
        "std_score": report.std_score,
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return EXIT_OK


_COMMANDS = {
    "generate": _cmd_generate,
    "detect": _cmd_detect,
    "bench": _cmd_bench,
    "eval": _cmd_eval,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (SolverDivergenceError, np.linalg.LinAlgError) as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, KeyError, OSError, GraphGenerationError) as err:
        print(f"input error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
