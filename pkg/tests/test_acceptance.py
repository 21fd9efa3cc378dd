"""End-to-end acceptance suite.

Eight criteria covering the headline Monte-Carlo experiments, the
detection-probability estimate, monotone degradation under measurement
noise and clutter, assignment-enumeration exactness, a brute-force filter
oracle, the fixed-detection consistency check, and the invariant suite.

The Monte-Carlo criteria are expensive (roughly 90 minutes single-core at
the default run counts). Run counts can be lowered for smoke testing via:

    RPMBM_ACCEPT_RUNS_CASE1  (default 100)
    RPMBM_ACCEPT_RUNS_CASE2  (default 30)
    RPMBM_ACCEPT_RUNS_SWEEP  (default 8, per sweep grid cell)
"""

import dataclasses
import itertools
import math
import os
from collections import Counter

import numpy as np
import pytest
from scipy.stats import spearmanr

from rpmbm.assignment import CostMatrix, murty_kbest
from rpmbm.cli import run_filter
from rpmbm.distributions import (
    BetaGaussianComponent,
    BetaParams,
    GaussianComponent,
    beta_from_moments,
)
from rpmbm.pmbm import (
    BernoulliTrack,
    BetaDetection,
    FilterConfig,
    FixedDetection,
    GlobalHypothesis,
    PmbmPosterior,
    PoissonIntensity,
    estimate,
    step,
    update,
)
from rpmbm.sim import (
    ScenarioConfig,
    default_scenario,
    generate_measurements,
    generate_truth,
    ncv_matrices,
    observation_matrices,
)

from helpers import brute_force_child_log_weights, enumerate_assignments, normalized
from test_invariants import _filter_invariants

RUNS_CASE1 = int(os.environ.get("RPMBM_ACCEPT_RUNS_CASE1", "100"))
RUNS_CASE2 = int(os.environ.get("RPMBM_ACCEPT_RUNS_CASE2", "30"))
RUNS_SWEEP = int(os.environ.get("RPMBM_ACCEPT_RUNS_SWEEP", "8"))

SIGMA_GRID = [5.0, 10.0, 15.0, 20.0, 25.0]
LAMBDA_GRID = [5.0, 10.0, 15.0, 20.0, 25.0]


def _mc_reports(cfg: ScenarioConfig, n_runs: int):
    return [run_filter(cfg, seed) for seed in range(n_runs)]


@pytest.fixture(scope="module")
def case1_reports():
    return _mc_reports(default_scenario(p_d_true=0.95), RUNS_CASE1)


@pytest.fixture(scope="module")
def case2_reports():
    return _mc_reports(default_scenario(p_d_true=0.65), RUNS_CASE2)


@pytest.fixture(scope="module")
def sweep_tables(case1_reports, case2_reports):
    """mean OSPA per grid cell for both cases and both sweep parameters.

    The headline cell (sigma_eps=10, lambda_c=10) reuses the first
    RUNS_SWEEP headline runs, whose seeds match by construction."""
    headline = {
        0.95: float(np.mean([r.mean_ospa for r in case1_reports[:RUNS_SWEEP]])),
        0.65: float(np.mean([r.mean_ospa for r in case2_reports[:RUNS_SWEEP]])),
    }
    tables = {}
    for p_d, param, grid in [
        (0.95, "sigma_eps", SIGMA_GRID),
        (0.95, "lambda_c", LAMBDA_GRID),
        (0.65, "sigma_eps", SIGMA_GRID),
        (0.65, "lambda_c", LAMBDA_GRID),
    ]:
        table = []
        for v in grid:
            if v == 10.0:
                table.append((v, headline[p_d]))
                continue
            cfg = default_scenario(p_d_true=p_d, **{param: v})
            reports = _mc_reports(cfg, RUNS_SWEEP)
            table.append((v, float(np.mean([r.mean_ospa for r in reports]))))
        tables[(p_d, param)] = table
    return tables


class TestCriterion1HeadlineCase1:
    def test_mean_ospa_in_band(self, case1_reports):
        mean = float(np.mean([r.mean_ospa for r in case1_reports]))
        print(f"\ncriterion 1: case 1 mean OSPA {mean:.2f} over "
              f"{len(case1_reports)} runs (band [9, 17])")
        assert 9.0 <= mean <= 17.0


class TestCriterion2HeadlineCase2:
    def test_mean_ospa_in_band(self, case2_reports):
        mean = float(np.mean([r.mean_ospa for r in case2_reports]))
        print(f"\ncriterion 2: case 2 mean OSPA {mean:.2f} over "
              f"{len(case2_reports)} runs (band [14, 27])")
        assert 14.0 <= mean <= 27.0


class TestCriterion3DetectionEstimate:
    def test_case1(self, case1_reports):
        est = float(np.mean([r.mean_p_d() for r in case1_reports]))
        print(f"\ncriterion 3: case 1 p_d estimate {est:.3f} (true 0.95 +- 0.05)")
        assert abs(est - 0.95) <= 0.05

    def test_case2(self, case2_reports):
        est = float(np.mean([r.mean_p_d() for r in case2_reports]))
        print(f"\ncriterion 3: case 2 p_d estimate {est:.3f} (true 0.65 +- 0.05)")
        assert abs(est - 0.65) <= 0.05


class TestCriterion4MonotoneDegradation:
    @pytest.mark.parametrize("p_d", [0.95, 0.65])
    @pytest.mark.parametrize("param", ["sigma_eps", "lambda_c"])
    def test_spearman(self, sweep_tables, p_d, param):
        table = sweep_tables[(p_d, param)]
        values = [v for v, _ in table]
        ospas = [o for _, o in table]
        rho = spearmanr(values, ospas).statistic
        print(f"\ncriterion 4: p_d={p_d} {param} sweep "
              + " ".join(f"{v:g}:{o:.1f}" for v, o in table)
              + f"  spearman={rho:.2f}")
        assert rho > 0.9


class TestCriterion5AssignmentExactness:
    def test_thousand_random_matrices(self):
        rng = np.random.default_rng(1234)
        for _ in range(1000):
            m = int(rng.integers(1, 5))
            n = int(rng.integers(m, 9))
            entries = rng.uniform(-5, 5, size=(m, n))
            mask = rng.random(size=(m, n)) < 0.15
            entries[mask] = np.inf
            for row in range(m):
                if not np.isfinite(entries[row]).any():
                    entries[row, rng.integers(n)] = rng.uniform(-5, 5)
            oracle = enumerate_assignments(entries)
            sols = murty_kbest(CostMatrix(entries, n - m), len(oracle) + 5)
            assert Counter(s.row_to_column for s in sols) == Counter(
                cols for cols, _ in oracle
            )
            want = dict(oracle)
            for s in sols:
                assert s.total_cost == pytest.approx(
                    want[s.row_to_column], abs=1e-9
                )
        print("\ncriterion 5: 1000 random matrices match exhaustive enumeration")


class TestCriterion6FilterOracle:
    OBS = (np.array([[1.0, 0.0]]), np.array([[1.0]]))

    @pytest.mark.parametrize("n_tracks,n_obs", list(itertools.product([0, 1, 2], [0, 1, 2, 3])))
    def test_hypothesis_weights_match_brute_force(self, n_tracks, n_obs):
        rng = np.random.default_rng(100 * n_tracks + n_obs)
        tracks = tuple(
            BernoulliTrack(
                ("t", i),
                float(rng.uniform(0.2, 0.9)),
                BetaParams(*rng.uniform(1, 5, 2)),
                GaussianComponent([rng.uniform(-2, 2), 0.0], np.eye(2)),
                assoc_key=(("t", i),),
            )
            for i in range(n_tracks)
        )
        poisson = PoissonIntensity(
            (
                BetaGaussianComponent(
                    0.4, BetaParams(1, 1), GaussianComponent([0.0, 0.0], np.eye(2))
                ),
                BetaGaussianComponent(
                    0.2, BetaParams(2, 2), GaussianComponent([1.0, 0.0], 2 * np.eye(2))
                ),
            )
        )
        Z = rng.uniform(-3, 3, size=(n_obs, 1))
        exhaustive = FilterConfig(
            murty_budget=10**6, max_hypotheses=10**6, prune_hypothesis=0.0,
            prune_track=0.0, gate_threshold=math.inf, k_beta=1.0,
        )
        post = PmbmPosterior(poisson, (GlobalHypothesis(0.0, tracks),))
        out = update(post, Z, self.OBS, 0.05, exhaustive)
        got = np.sort(normalized([h.log_weight for h in out.hypotheses]))
        want = np.sort(
            normalized(
                brute_force_child_log_weights(tracks, Z, poisson, self.OBS, 0.05)
            )
        )
        assert len(got) == len(want)
        np.testing.assert_allclose(got, want, atol=1e-9)


class TestCriterion7FixedDetectionConsistency:
    def test_degenerate_prior_matches_fixed_mode(self):
        cfg = ScenarioConfig(
            region=(0.0, 1000.0, 0.0, 1000.0),
            duration=10,
            birth_means=[[300.0, 300.0, 0.0, 0.0], [700.0, 700.0, 0.0, 0.0]],
            object_schedule=[[1, 11, 0], [1, 11, 1]],
            lambda_c=0.0,
            p_d_true=0.9,
        )
        truth = generate_truth(cfg, 7)
        scans = generate_measurements(truth, cfg, 8)
        motion = ncv_matrices(cfg.delta_t, cfg.sigma_v)
        obs = observation_matrices(cfg.sigma_eps)
        beta0 = beta_from_moments(cfg.p_d_true, 1e-6)
        birth_beta = PoissonIntensity(
            tuple(
                BetaGaussianComponent(
                    cfg.birth_weight, beta0,
                    GaussianComponent(np.asarray(m, float), cfg.birth_cov),
                )
                for m in cfg.birth_means
            )
        )
        birth_fixed = PoissonIntensity(
            tuple(dataclasses.replace(c, beta=None) for c in birth_beta.components)
        )
        fcfg = FilterConfig(k_beta=1.0)
        post_b = PmbmPosterior()
        post_f = PmbmPosterior()
        clutter = 1e-300  # clutter-free scenario
        for sd in scans:
            post_b = step(post_b, sd.observations, motion, obs, birth_beta,
                          cfg.p_s, clutter, fcfg, BetaDetection())
            post_f = step(post_f, sd.observations, motion, obs, birth_fixed,
                          cfg.p_s, clutter, fcfg, FixedDetection(cfg.p_d_true))
            est_b = estimate(post_b, fcfg.extract_threshold)
            est_f = estimate(post_f, fcfg.extract_threshold)
            assert est_b.cardinality_count == est_f.cardinality_count
            means_b = sorted((x for _, x in est_b.states), key=lambda x: x[0])
            means_f = sorted((x for _, x in est_f.states), key=lambda x: x[0])
            for mb, mf in zip(means_b, means_f):
                np.testing.assert_allclose(mb, mf, atol=1e-3)
        print("\ncriterion 7: degenerate detection prior matches fixed mode")


class TestCriterion8Invariants:
    @pytest.mark.parametrize("seed", range(3))
    def test_invariants_hold_on_headline_scenario(self, seed):
        cfg = default_scenario(duration=20)
        truth = generate_truth(cfg, seed)
        scans = generate_measurements(truth, cfg, seed + 1)
        motion = ncv_matrices(cfg.delta_t, cfg.sigma_v)
        obs = observation_matrices(cfg.sigma_eps)
        birth = PoissonIntensity(
            tuple(
                BetaGaussianComponent(
                    cfg.birth_weight, BetaParams(*cfg.birth_beta),
                    GaussianComponent(np.asarray(m, float), cfg.birth_cov),
                )
                for m in cfg.birth_means
            )
        )
        post = PmbmPosterior()
        for sd in scans:
            post = step(post, sd.observations, motion, obs, birth,
                        cfg.p_s, cfg.clutter_density, FilterConfig(), BetaDetection())
            _filter_invariants(post)
