"""Monte-Carlo harness, fits, and scan structure."""

import math

import numpy as np
import pytest

from polymer_lab import disorder, experiments, partition, rw_kernel
from polymer_lab.chaos import ScaleParams
from polymer_lab.disorder import DisorderSpec
from polymer_lab.errors import DomainError


class TestRateFit:
    def test_exact_power_law(self):
        pts = [(t, 3.0 * t**-1.0) for t in (4, 8, 16, 32)]
        fit = experiments.rate_fit(pts)
        assert fit.slope == pytest.approx(-1.0, abs=1e-12)
        assert fit.half_width < 1e-10
        assert math.exp(fit.intercept) == pytest.approx(3.0, rel=1e-10)

    def test_constant_points(self):
        fit = experiments.rate_fit([(2, 5.0), (4, 5.0), (8, 5.0)])
        assert fit.slope == pytest.approx(0.0, abs=1e-13)

    def test_needs_three_points(self):
        with pytest.raises(DomainError):
            experiments.rate_fit([(2, 1.0), (4, 0.5)])

    def test_needs_positive_values(self):
        with pytest.raises(DomainError):
            experiments.rate_fit([(2, 1.0), (4, -0.5), (8, 0.2)])

    def test_ci_coverage_on_noisy_power_law(self, rng):
        # slope -0.7 with 10% log-normal noise: the 95% CI must cover the
        # truth in at least ~90% of repetitions
        hits = 0
        reps = 400
        ts = np.array([4.0, 8.0, 16.0, 32.0, 64.0, 128.0])
        for _ in range(reps):
            vals = ts**-0.7 * np.exp(rng.normal(0.0, 0.1, size=ts.size))
            fit = experiments.rate_fit(list(zip(ts, vals)))
            if abs(fit.slope + 0.7) <= fit.half_width:
                hits += 1
        assert hits / reps >= 0.90


class TestMcExpectation:
    def test_constant_estimator(self):
        task = experiments.MCTask("one", lambda s: np.ones(len(s)))
        rep = experiments.mc_expectation(task, 100, seed=0)
        assert rep.mean == 1.0 and rep.stderr == 0.0
        assert rep.name == "one" and rep.n == 100

    def test_reproducible(self):
        def fn(seeds):
            # deterministic function of the derived seeds
            return (np.asarray(seeds, dtype=np.float64) % 7.0) / 7.0

        a = experiments.mc_expectation(experiments.MCTask("m", fn), 333, seed=5)
        b = experiments.mc_expectation(experiments.MCTask("m", fn), 333, seed=5)
        assert (a.mean, a.stderr) == (b.mean, b.stderr)

    def test_batch_size_does_not_change_result(self):
        def fn(seeds):
            return np.sin(np.asarray(seeds, dtype=np.float64))

        a = experiments.mc_expectation(experiments.MCTask("m", fn), 200,
                                       seed=1, batch=7)
        b = experiments.mc_expectation(experiments.MCTask("m", fn), 200,
                                       seed=1, batch=64)
        assert a.mean == pytest.approx(b.mean, rel=1e-15)

    def test_needs_two_samples(self):
        task = experiments.MCTask("one", lambda s: np.ones(len(s)))
        with pytest.raises(DomainError):
            experiments.mc_expectation(task, 1, seed=0)

    def test_partition_mean_one(self, spec):
        # <Z_{0,0}^8> = 1
        from polymer_lab.disorder import Region

        region = Region((-10,) * 3, (10,) * 3, 0, 8)
        field = disorder.sample_field(spec, region)

        def fn(seeds):
            return partition.forward_evolve(field, (0, 0, 0), 0, 8,
                                            seeds=seeds).totals_fast()

        rep = experiments.mc_expectation(experiments.MCTask("Z8", fn), 4000,
                                         seed=0)
        assert abs(rep.mean - 1.0) <= 4.0 * rep.stderr

    def test_partition_second_moment(self, spec):
        from polymer_lab.disorder import Region

        region = Region((-10,) * 3, (10,) * 3, 0, 8)
        field = disorder.sample_field(spec, region)

        def fn(seeds):
            z = partition.forward_evolve(field, (0, 0, 0), 0, 8,
                                         seeds=seeds).totals_fast()
            return z * z

        rep = experiments.mc_expectation(experiments.MCTask("Z8sq", fn), 4000,
                                         seed=0)
        oracle = partition.replica_second_moment(spec, 8)
        assert abs(rep.mean - oracle) <= 4.0 * rep.stderr


class TestClosedForms:
    def test_spatial_internal_identity(self, spec):
        # Green-function route and kernel-sum route agree
        lam = disorder.lambda_of(spec)
        for y in [(0, 0, 0), (2, 0, 0), (1, 1, 0)]:
            a = experiments.spatial_cov_closed_form(3, y, lam)
            ks = experiments.spatial_kernel_sum(3, y)
            alpha = rw_kernel.alpha_d(3, 1e-8)
            b = ks * lam / (1.0 - alpha * lam)
            assert abs(a - b) < 1e-8

    def test_spatial_odd_parity_zero(self, spec):
        lam = disorder.lambda_of(spec)
        assert experiments.spatial_cov_closed_form(3, (1, 0, 0), lam) == 0.0
        assert experiments.spatial_kernel_sum(3, (1, 2, 0)) == 0.0

    def test_temporal_matches_spatial_at_zero(self, spec):
        lam = disorder.lambda_of(spec)
        a = experiments.temporal_cov_closed_form(3, 0, lam)
        b = experiments.spatial_cov_closed_form(3, (0, 0, 0), lam)
        assert a == pytest.approx(b, abs=1e-10)

    def test_temporal_odd_zero_and_decreasing(self, spec):
        lam = disorder.lambda_of(spec)
        assert experiments.temporal_cov_closed_form(3, 3, lam) == 0.0
        vals = [experiments.temporal_cov_closed_form(3, s, lam)
                for s in (0, 2, 4, 8)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert all(v > 0 for v in vals)

    def test_finite_horizon_cov_increases_to_closed_form(self, spec):
        # exact finite-T covariances approach the limiting closed form from
        # below
        lam = disorder.lambda_of(spec)
        closed = experiments.spatial_cov_closed_form(3, (2, 0, 0), lam)
        vals = [partition.replica_pair_covariance(spec, (2, 0, 0), T)
                for T in (8, 16, 32)]
        assert vals[0] < vals[1] < vals[2] < closed


class TestScans:
    def test_convergence_scan_structure(self, spec):
        res = experiments.convergence_rate_scan(spec, t_ladder=(2, 4, 8),
                                                T_ref=16, n=600, seed=0)
        exact = [r["exact"] for r in res.rows]
        assert all(v > 0 for v in exact)
        assert all(b < a for a, b in zip(exact, exact[1:]))
        for r in res.rows:
            assert abs(r["mean"] - r["exact"]) <= 4.0 * r["stderr"]
        assert res.meta["theta_cap"] == pytest.approx(0.5)
        assert res.fit.slope < 0

    def test_convergence_needs_larger_reference(self, spec):
        with pytest.raises(DomainError):
            experiments.convergence_rate_scan(spec, t_ladder=(4, 8), T_ref=8)

    def test_correlation_scan_odd_offset(self, spec):
        res = experiments.correlation_scan(spec, "spatial", offsets=(1, 3),
                                           T_proxy=8, n=800, seed=0)
        for r in res.rows:
            assert r["closed_form"] == 0.0
            assert abs(r["mean"]) <= 4.0 * r["stderr"]

    def test_correlation_scan_matches_finite_horizon_oracle(self, spec):
        # at small T the MC covariance must match the exact finite-T value
        T = 8
        res = experiments.correlation_scan(spec, "spatial", offsets=(0, 2),
                                           T_proxy=T, n=3000, seed=0)
        for r in res.rows:
            y = (r["offset"], 0, 0)
            oracle = partition.replica_pair_covariance(spec, y, T)
            assert abs(r["mean"] - oracle) <= 4.0 * r["stderr"]

    def test_correlation_temporal_mode(self, spec):
        res = experiments.correlation_scan(spec, "temporal", offsets=(0, 2),
                                           T_proxy=8, n=500, seed=0)
        assert len(res.rows) == 2
        with pytest.raises(DomainError):
            experiments.correlation_scan(spec, "temporal", offsets=(-2,),
                                         T_proxy=8, n=10)
        with pytest.raises(DomainError):
            experiments.correlation_scan(spec, "sideways", offsets=(0,),
                                         T_proxy=8, n=10)

    def test_factorization_scan_smoke(self, spec):
        res = experiments.factorization_scan(spec, ScaleParams(),
                                             t_ladder=(4, 6, 8), n=48, seed=0)
        assert len(res.meta["sups"]) == 3
        assert all(v > 0 for _, v in res.meta["sups"])
        # deterministic given (seed, config)
        res2 = experiments.factorization_scan(spec, ScaleParams(),
                                              t_ladder=(4, 6, 8), n=48, seed=0)
        assert res.meta["sups"] == res2.meta["sups"]

    def test_factorization_beta_zero(self):
        spec0 = DisorderSpec("rademacher", 0.0, 0)
        res = experiments.factorization_scan(spec0, ScaleParams(),
                                             t_ladder=(4, 6, 8), n=8, seed=0)
        # residual reflects the absorbing-boundary truncation (4.5 sigma
        # margin), not noise: stderr is exactly 0 per rung
        for r in res.rows:
            assert r["mean"] == pytest.approx(0.0, abs=1e-5)
            assert r["stderr"] == 0.0

    def test_parity_adjust(self):
        assert experiments._parity_adjust(5, 8) == 4
        assert experiments._parity_adjust(4, 8) == 4
        assert experiments._parity_adjust(0, 7) == 0
        assert experiments._parity_adjust(3, 7) == 3
