from __future__ import annotations

import numpy as np
import pytest

import hubdetect as hd
from hubdetect.harness import (
    ExperimentConfig,
    consistency_distance,
    correlation_score,
    error_rate,
    eval_real,
    run_sweep,
    run_trial,
)
from hubdetect.seeding import derive_seed
from hubdetect.solvers import NmfConfig


class TestErrorRate:
    def test_identical_sets(self):
        assert error_rate(frozenset(range(10)), frozenset(range(10)), 10) == 0.0

    def test_disjoint_sets(self):
        assert error_rate(frozenset(range(10)), frozenset(range(10, 20)), 10) == 1.0

    def test_partial_overlap(self):
        detected = frozenset(range(8)) | {20, 21}
        assert error_rate(frozenset(range(10)), detected, 10) == pytest.approx(0.2)

    def test_symmetric(self):
        a = frozenset({0, 1, 2})
        b = frozenset({2, 3, 4})
        assert error_rate(a, b, 3) == error_rate(b, a, 3)

    def test_size_mismatch_rejected(self):
        with pytest.raises(ValueError, match="size"):
            error_rate(frozenset({1, 2}), frozenset({1, 2, 3}), 3)


class TestDeriveSeed:
    def test_deterministic_and_distinct(self):
        assert derive_seed(1, 40, 0) == derive_seed(1, 40, 0)
        assert derive_seed(1, 40, 0) != derive_seed(1, 40, 1)
        assert derive_seed(1, 40, 0) != derive_seed(2, 40, 0)
        assert derive_seed(1, 0.4, 0) != derive_seed(1, 40, 0)

    def test_nonnegative_63_bit(self):
        s = derive_seed("anything", 3.14, 7)
        assert 0 <= s < 2**63


def small_config(**overrides) -> ExperimentConfig:
    base = dict(
        graph_kind="cp",
        n=40,
        p1=0.8,
        p2=0.1,
        core_size=8,
        filter_spec="diffusion:0.2",
        k=8,
        m=60,
        sigma2=0.01,
        c=5,
        sweep_var="k",
        sweep_values=(4, 8),
        detectors=("pca", "knn"),
        trials=6,
        base_seed=5,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestRunSweep:
    def test_single_noiseless_strong_trial_detects_core_exactly(self):
        cfg = ExperimentConfig(
            graph_kind="cp", n=100, p1=1.0, p2=0.05, filter_spec="diffusion:0.1",
            k=40, m=200, sigma2=0.0, c=10, sweep_var="k", sweep_values=(40,),
            detectors=("two-stage",), trials=1, base_seed=3,
            step_a=0.01, step_b=0.01, nmf_iters=2000,
        )
        res = run_sweep(cfg, workers=1)
        assert res.cell(40, "two-stage").mean_error == 0.0

    @pytest.mark.slow
    def test_pca_error_non_increasing_in_sample_count(self):
        cfg = ExperimentConfig(
            graph_kind="cp", n=100, p1=0.4, p2=0.05, filter_spec="iir:0.02",
            k=40, sigma2=0.01, c=10, sweep_var="m", sweep_values=(50, 200, 1000),
            detectors=("pca",), trials=40, base_seed=11,
        )
        res = run_sweep(cfg)
        means = [res.cell(v, "pca").mean_error for v in (50, 200, 1000)]
        assert means[0] >= means[1] - 0.02
        assert means[1] >= means[2] - 0.02
        assert means[0] > means[2]

    def test_parallel_matches_serial(self):
        cfg = small_config()
        serial = run_sweep(cfg, workers=1)
        parallel = run_sweep(cfg, workers=2)
        for v in cfg.sweep_values:
            for d in cfg.detectors:
                assert serial.cell(v, d).mean_error == parallel.cell(v, d).mean_error
                assert serial.cell(v, d).std_error == parallel.cell(v, d).std_error

    def test_adding_detectors_never_perturbs_data(self):
        lean = run_sweep(small_config(detectors=("pca",)), workers=1)
        full = run_sweep(small_config(detectors=("pca", "knn")), workers=1)
        for v in (4, 8):
            assert lean.cell(v, "pca").mean_error == full.cell(v, "pca").mean_error

    def test_failures_recorded_without_aborting(self):
        cfg = small_config(knn=40)  # knn >= n fails in every trial
        with pytest.warns(UserWarning, match="failed trial"):
            res = run_sweep(cfg, workers=1)
        for v in (4, 8):
            cell = res.cell(v, "knn")
            assert cell.failures == 6 and cell.trials == 0
            assert np.isnan(cell.mean_error)
            assert res.cell(v, "pca").trials == 6  # other detector unaffected

    def test_planted_truth_policy(self):
        cfg = small_config(core_size=5, truth="planted", detectors=("pca",), trials=3)
        res = run_sweep(cfg, workers=1)
        assert res.cell(4, "pca").trials == 3
        with pytest.raises(ValueError, match="planted"):
            small_config(truth="planted")  # core_size != c

    def test_ba_sweep_runs(self):
        cfg = ExperimentConfig(
            graph_kind="ba", n=40, m_attach=4, filter_spec="diffusion:0.2",
            k=8, m=50, sigma2=0.01, c=10, sweep_var="k", sweep_values=(8,),
            detectors=("pca",), trials=3, base_seed=1,
        )
        res = run_sweep(cfg, workers=1)
        assert res.cell(8, "pca").trials == 3

    def test_csv_output(self, tmp_path):
        out = tmp_path / "bench.csv"
        cfg = small_config(trials=2, out=str(out))
        run_sweep(cfg, workers=1)
        lines = out.read_text().splitlines()
        assert lines[0].startswith("sweep_var,sweep_value,detector,mean_error")
        assert len(lines) == 1 + 2 * 2  # two sweep values x two detectors

    def test_run_trial_reports_seconds_per_detector(self):
        out = run_trial(small_config(), 8, 0)
        assert set(out["errors"]) == {"pca", "knn"}
        assert all(s >= 0 for s in out["seconds"].values())

    def test_invalid_configs_rejected(self):
        with pytest.raises(ValueError, match="sweep"):
            small_config(sweep_var="alpha")
        with pytest.raises(ValueError, match="nonempty"):
            small_config(sweep_values=())
        with pytest.raises(ValueError, match="detectors"):
            small_config(detectors=("pca", "magic"))


class TestFromMapping:
    def test_parses_nested_toml(self, tmp_path):
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        text = """
        m = 150
        sigma2 = 0.02
        c = 10
        trials = 7
        base_seed = 42
        detectors = ["pca", "two-stage"]

        [graph]
        kind = "cp"
        n = 80
        p1 = 0.5
        p2 = 0.05

        [filter]
        spec = "iir:0.02"

        [excitation]
        k = 20
        b_density = 0.15

        [sweep]
        var = "k"
        values = [10, 20]

        [nmf]
        a = 0.05
        b = 0.05
        iters = 500

        [rpca]
        lambda_l = 0.3
        """
        cfg = ExperimentConfig.from_mapping(tomllib.loads(text))
        assert cfg.n == 80 and cfg.p1 == 0.5 and cfg.m == 150
        assert cfg.k == 20 and cfg.b_density == 0.15
        assert cfg.sweep_values == (10, 20)
        assert cfg.detectors == ("pca", "two-stage")
        assert cfg.step_a == 0.05 and cfg.nmf_iters == 500
        assert cfg.lambda_l == 0.3 and cfg.base_seed == 42


class TestCorrelationScore:
    def test_parallel_vectors(self):
        assert correlation_score([1.0, 2.0], [2.0, 4.0]) == pytest.approx(1.0)

    def test_disjoint_support(self):
        assert correlation_score([1.0, 0.0], [0.0, 3.0]) == pytest.approx(0.0)

    def test_direct_value(self):
        assert correlation_score([1.0, 2.0], [2.0, 1.0]) == pytest.approx(4 / 5)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError, match="zero-norm"):
            correlation_score([0.0, 0.0], [1.0, 2.0])

    def test_nonnegative_inputs_score_in_unit_interval(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = np.abs(rng.normal(size=6)) + 1e-6
            g = np.abs(rng.normal(size=6)) + 1e-6
            assert 0.0 <= correlation_score(x, g) <= 1.0


def strong_filter_dataset(seed=2):
    g = hd.generate_cp(hd.CpParams(n=50, p1=1.0, p2=0.08, core_size=10, seed=seed))
    ds = hd.generate_dataset(
        g, hd.DiffusionFilter(0.3), hd.ExcitationParams(k=10, seed=seed + 1), 100, 0.01
    )
    return np.abs(ds.Y)


class TestEvalReal:
    def test_rank_one_nonnegative_scores_all_one(self):
        rng = np.random.default_rng(3)
        Y = np.outer(np.abs(rng.normal(size=20)) + 0.1, np.abs(rng.normal(size=40)) + 0.1)
        g_series = Y[:, 32:].sum(axis=0)
        rep = eval_real(Y, g_series, k=2, c=5, restarts=2,
                        nmf_cfg=NmfConfig(k=2, max_iters=100, seed=0))
        assert all(score == pytest.approx(1.0, abs=1e-9) for _, _, score in rep.rows)

    def test_two_stage_selection_beats_random_subsets(self):
        Y = strong_filter_dataset()
        g_series = Y[:, 80:].sum(axis=0)
        rep = eval_real(Y, g_series, k=10, c=10, restarts=5,
                        nmf_cfg=NmfConfig(k=10, max_iters=800, seed=4))
        rng = np.random.default_rng(9)
        random_means = []
        for _ in range(100):
            subset = rng.choice(50, size=10, replace=False)
            random_means.append(
                np.mean([correlation_score(Y[i, 80:], g_series) for i in subset])
            )
        assert rep.mean_score >= float(np.mean(random_means))

    def test_frequency_budget(self):
        Y = strong_filter_dataset(seed=5)
        g_series = Y[:, 80:].sum(axis=0)
        rep = eval_real(Y, g_series, k=10, c=10, restarts=4,
                        nmf_cfg=NmfConfig(k=10, max_iters=200, seed=1))
        assert sum(freq for _, freq, _ in rep.rows) <= 4 * 10
        freqs = [freq for _, freq, _ in rep.rows]
        assert freqs == sorted(freqs, reverse=True)

    def test_shift_min_enables_negative_data(self):
        rng = np.random.default_rng(6)
        Y = rng.normal(size=(20, 50)) - 2.0
        g_series = np.abs(rng.normal(size=10)) + 0.1
        rep = eval_real(Y, g_series, k=3, c=4, restarts=1, shift_min=True,
                        nmf_cfg=NmfConfig(k=3, max_iters=100, seed=2))
        assert all(0.0 <= score <= 1.0 for _, _, score in rep.rows)

    def test_g_length_mismatch_rejected(self):
        Y = np.abs(np.random.default_rng(7).normal(size=(10, 20)))
        with pytest.raises(ValueError, match="test block"):
            eval_real(Y, np.ones(3), k=2, c=3, restarts=1,
                      nmf_cfg=NmfConfig(k=2, max_iters=50, seed=0))

    def test_split_validation(self):
        Y = np.abs(np.random.default_rng(8).normal(size=(10, 20)))
        with pytest.raises(ValueError, match="split"):
            eval_real(Y, np.ones(4), k=2, c=3, split=1.5)

    def test_pca_method(self):
        Y = strong_filter_dataset(seed=7)
        g_series = Y[:, 80:].sum(axis=0)
        rep = eval_real(Y, g_series, k=10, c=10, restarts=3, method="pca")
        assert len(rep.rows) == 10
        assert all(freq == 3 for _, freq, _ in rep.rows)


class TestConsistencyDistance:
    def test_full_fraction_gives_zero(self):
        Y = strong_filter_dataset(seed=8)
        cfg = NmfConfig(k=10, max_iters=300, seed=7)
        assert consistency_distance(Y, 1.0, trials=2, restarts=2, c=10, nmf_cfg=cfg) == 0.0

    def test_more_data_means_more_consistency(self):
        Y = strong_filter_dataset(seed=2)
        cfg = NmfConfig(k=10, max_iters=400, seed=7)
        d_large = consistency_distance(Y, 0.9, trials=4, restarts=2, c=10, nmf_cfg=cfg)
        d_small = consistency_distance(Y, 0.1, trials=4, restarts=2, c=10, nmf_cfg=cfg)
        assert d_large <= d_small
        # L1 distance between probability vectors never exceeds 2
        assert 0.0 <= d_small <= 2.0

    def test_fraction_validation(self):
        with pytest.raises(ValueError, match="subset_fraction"):
            consistency_distance(np.ones((4, 8)), 0.0, trials=1, restarts=1, c=2,
                                 nmf_cfg=NmfConfig(k=1, max_iters=10, seed=0))

    def test_needs_rank_or_config(self):
        with pytest.raises(ValueError, match="nmf_cfg"):
            consistency_distance(np.ones((4, 8)), 0.5, trials=1, restarts=1, c=2)
