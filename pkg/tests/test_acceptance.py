"""Acceptance gate: one test per criterion, tolerances pinned.

All criteria use d = 3, Rademacher disorder at beta = 0.3. Each test
asserts every sub-check of its criterion and the stated wall-clock budget,
collecting sub-failures so a single run reports everything at once.
"""

import itertools
import math
import time

import numpy as np
import pytest

from polymer_lab import chaos, disorder, experiments, partition, rw_kernel
from polymer_lab.chaos import ChaosIndex, ScaleParams
from polymer_lab.disorder import DisorderSpec, Region

SPEC = DisorderSpec("rademacher", 0.3, 1)
OVERRIDE = (3.0, 2.0)  # injected (k, large cut) for small-t test mode


def check(failures, ok, msg):
    if not ok:
        failures.append(msg)


def finish(failures, elapsed, budget):
    check(failures, elapsed < budget,
          f"runtime {elapsed:.1f}s exceeds budget {budget}s")
    assert not failures, "\n".join(failures)


def parity_valid(t, d=3):
    """All y with |y|_1 <= t and |y|_1 = t mod 2."""
    for y in itertools.product(range(-t, t + 1), repeat=d):
        l1 = sum(abs(c) for c in y)
        if l1 <= t and (l1 - t) % 2 == 0:
            yield y


def make_field(spec, t, lo_t=0, hi_t=None, extra=1):
    r = t + extra
    hi = t + 1 if hi_t is None else hi_t
    return disorder.sample_field(
        spec, Region((-r,) * 3, (r,) * 3, lo_t, hi))


def test_criterion_01_kernel_exactness():
    start = time.perf_counter()
    failures = []
    table = rw_kernel.build_kernel_table(3, 64)
    for t in range(65):
        check(failures, abs(table.total(t) - 1.0) <= 1e-12,
              f"normalization off at t={t}: {table.total(t)!r}")
        s = table.slice(t)
        ax = np.abs(np.arange(-t, t + 1))
        par = (ax[:, None, None] + ax[None, :, None] + ax[None, None, :]
               + t) % 2
        check(failures, not np.any(s[par == 1]),
              f"parity zeros not exact at t={t}")
    for t in range(33):
        lhs = table.sum_sq(t)
        rhs = table.q(2 * t, (0, 0, 0))
        check(failures, abs(lhs - rhs) <= 1e-14,
              f"sum-sq identity off at t={t}: {lhs!r} vs {rhs!r}")
    finish(failures, time.perf_counter() - start, 10)


def test_criterion_02_chaos_dp_equivalence():
    start = time.perf_counter()
    failures = []
    seeds = np.arange(20, dtype=np.uint64)
    for t in range(1, 7):
        field = make_field(SPEC, t)
        for y in parity_valid(t):
            dp = partition.point_to_point(field, (0, 0, 0), 0, y, t,
                                          seeds=seeds)
            ch = chaos.chaos_sum_full(field, y, t, seeds=seeds)
            rel = np.max(np.abs(ch - dp) / np.abs(dp))
            if rel > 1e-9:
                failures.append(f"chaos/DP mismatch t={t} y={y}: rel={rel:.3e}")
    finish(failures, time.perf_counter() - start, 60)


def test_criterion_03_decomposition_identities():
    start = time.perf_counter()
    failures = []
    for t in range(4, 9):
        # hat-weight passes recenter at y, so the region must cover y + t
        field = make_field(SPEC, t, extra=4)
        for m in (t % 2, (t % 2) + 2):
            y = (m, 0, 0)
            dec = chaos.decompose_B(field, y, t, ScaleParams(), OVERRIDE)
            check(failures, dec.residual <= 1e-10,
                  f"B identity residual {dec.residual:.3e} at t={t} y={y}")
            check(failures, sum(dec.counts.values()) == 2 ** (t + 1) - 1,
                  f"index enumeration not exhaustive at t={t} y={y}")
            fl = chaos.decompose_FL(field, y, t, ScaleParams(), OVERRIDE)
            check(failures, fl.residual <= 1e-10,
                  f"FL identity residual {fl.residual:.3e} at t={t} y={y}")
    # structure facts on 1e5 random index vectors under production params
    rng = np.random.default_rng(7)
    params = ScaleParams()
    done = 0
    while done < 100_000:
        t = int(rng.integers(30, 4000))
        k = chaos.k_of_t(params, t)
        r = int(rng.integers(1, int(k) + 1))
        times = tuple(np.unique(rng.integers(0, t + 1, size=r)))
        cls = chaos.classify_gaps(ChaosIndex(t, times), t, params)
        check(failures, cls.kind in ("HugeAt", "NoHuge"),
              f"unknown class {cls.kind}")
        if cls.kind == "NoHuge" and cls.large_count < 2:
            failures.append(f"NoHuge with < 2 large gaps: t={t} times={times}")
        done += 1
    finish(failures, time.perf_counter() - start, 300)


def test_criterion_04_second_moment_cross_oracle():
    start = time.perf_counter()
    failures = []
    _, curve = partition.chaos_second_moment(SPEC, 16, return_curve=True)
    for tau in range(17):
        rep = partition.replica_second_moment(SPEC, tau)
        check(failures, abs(rep - curve[tau]) <= 1e-10,
              f"oracle mismatch at tau={tau}: {rep!r} vs {curve[tau]!r}")
    # MC variance of Z_{0,0}^16 against the replica oracle
    oracle_var = partition.replica_second_moment(SPEC, 16) - 1.0
    radius = 13
    field = disorder.sample_field(
        SPEC, Region((-radius - 1,) * 3, (radius + 1,) * 3, 0, 16))

    def fn(seeds):
        z = partition.forward_evolve(field, (0, 0, 0), 0, 16, seeds=seeds,
                                     radius=radius).totals_fast()
        return (z - 1.0) ** 2

    rep = experiments.mc_expectation(experiments.MCTask("varZ16", fn),
                                     10_000, seed=0)
    check(failures, abs(rep.mean - oracle_var) <= 4.0 * rep.stderr,
          f"MC variance {rep.mean:.6f} vs oracle {oracle_var:.6f} "
          f"(stderr {rep.stderr:.2e})")
    finish(failures, time.perf_counter() - start, 600)


def test_criterion_05_alpha3_consistency():
    start = time.perf_counter()
    failures = []
    a_sum = rw_kernel.alpha_d(3, 1e-9)
    a_green = rw_kernel.green_value(3, (0, 0, 0), 1e-9) - 1.0
    check(failures, abs(a_sum - a_green) <= 1e-8,
          f"alpha routes disagree: {a_sum!r} vs {a_green!r}")
    margin = disorder.weak_disorder_margin(SPEC, 3)
    check(failures, margin < 1.0, f"weak-disorder margin {margin!r} >= 1")
    check(failures, margin == pytest.approx(a_sum * math.tanh(0.3) ** 2,
                                            rel=1e-8),
          "margin does not equal alpha * tanh^2(beta)")
    finish(failures, time.perf_counter() - start, 10)


def test_criterion_06_spatial_covariance_identity():
    start = time.perf_counter()
    failures = []
    res = experiments.correlation_scan(SPEC, "spatial", offsets=(0, 1, 2, 4),
                                       T_proxy=40, n=20_000, seed=0)
    rows = {r["offset"]: r for r in res.rows}
    for m in (0, 2, 4):
        r = rows[m]
        check(failures,
              abs(r["mean"] - r["closed_form"]) <= 4.0 * r["stderr"],
              f"cov at y={m}e1: MC {r['mean']:.6f} vs closed "
              f"{r['closed_form']:.6f} (stderr {r['stderr']:.2e})")
    r = rows[1]
    check(failures, abs(r["mean"]) <= 4.0 * r["stderr"],
          f"odd-parity cov not ~0: {r['mean']:.6f} "
          f"(stderr {r['stderr']:.2e})")
    lam = disorder.lambda_of(SPEC)
    stab4 = 4.0 * experiments.spatial_cov_closed_form(3, (4, 0, 0), lam)
    stab6 = 6.0 * experiments.spatial_cov_closed_form(3, (6, 0, 0), lam)
    check(failures, rows[4]["stabilization"] == pytest.approx(stab4, rel=1e-12),
          "scan stabilization column disagrees with closed form")
    ratio = stab4 / stab6
    check(failures, abs(ratio - 1.0) <= 0.25,
          f"stabilization ratio 4 vs 6 = {ratio:.4f} outside 25%")
    finish(failures, time.perf_counter() - start, 1800)


def test_criterion_07_convergence_rate():
    start = time.perf_counter()
    failures = []
    res = experiments.convergence_rate_scan(SPEC, t_ladder=(4, 8, 16, 32),
                                            T_ref=64, n=4000, seed=0)
    exact = [r["exact"] for r in res.rows]
    check(failures, all(v > 0 for v in exact), "exact curve not positive")
    check(failures, all(b < a for a, b in zip(exact, exact[1:])),
          "exact curve not decreasing")
    for r in res.rows:
        check(failures, abs(r["mean"] - r["exact"]) <= 4.0 * r["stderr"],
              f"MC L2 at t={r['t']}: {r['mean']:.6f} vs exact "
              f"{r['exact']:.6f} (stderr {r['stderr']:.2e})")
    theta_hat = -res.fit.slope
    check(failures, theta_hat >= 0.3,
          f"fitted decay exponent {theta_hat:.4f} < 0.3")
    finish(failures, time.perf_counter() - start, 1200)


def test_criterion_08_factorization_decay():
    start = time.perf_counter()
    failures = []
    res = experiments.factorization_scan(SPEC, ScaleParams(),
                                         t_ladder=(8, 16, 32, 48), n=1000,
                                         seed=0)
    sups = res.meta["sups"]
    check(failures, all(b < a for (_, a), (_, b) in zip(sups, sups[1:])),
          f"sup not strictly decreasing: {sups}")
    check(failures, res.fit is not None and res.fit.slope <= -0.2,
          f"fit slope {res.fit.slope if res.fit else None} > -0.2")
    if res.fit is not None:
        check(failures, res.fit.slope + res.fit.half_width < 0.0,
              f"95% CI [{res.fit.slope - res.fit.half_width:.3f}, "
              f"{res.fit.slope + res.fit.half_width:.3f}] does not exclude 0")
    finish(failures, time.perf_counter() - start, 1800)


def test_criterion_09_tilting_and_fourier():
    start = time.perf_counter()
    failures = []
    for t in (10, 20, 40):
        r = int(0.2 * t)
        for z in itertools.product(range(-r, r + 1), repeat=3):
            if sum(c * c for c in z) > (0.2 * t) ** 2:
                continue
            st = rw_kernel.tilt_solve(z, t, tol=1e-12)
            if st.residual > 1e-12:
                failures.append(
                    f"tilt residual {st.residual:.3e} at z={z}, t={t}")
    table = rw_kernel.build_kernel_table(3, 24)
    phis = [np.zeros(3), np.array([0.1, -0.05, 0.2]),
            rw_kernel.tilt_solve((2, 0, 0), 10).phi]
    for t in range(13):
        for z in [(0, 0, 0), (t % 2, 0, 0), (2, 0, 0), (1, 1, 0), (3, 1, 2)]:
            # the quadrature rule is exact for per-axis degree <= 2t + 1,
            # which covers every z inside the walk cone
            if sum(abs(c) for c in z) > t:
                continue
            for phi in phis:
                lhs, rhs = rw_kernel.fourier_identity_check(z, t, phi, table)
                if abs(lhs - rhs) > 1e-10 * max(1.0, abs(lhs)):
                    failures.append(
                        f"Fourier identity off at t={t} z={z}: "
                        f"{lhs!r} vs {rhs!r}")
    for phi in phis:
        for t in (0, 1, 5, 12, 24):
            try:
                rw_kernel.tilted_mass(phi, t, table=table, check_tol=1e-10)
            except AssertionError as exc:
                failures.append(str(exc))
    finish(failures, time.perf_counter() - start, 300)


def test_criterion_10_composition_bound():
    start = time.perf_counter()
    failures = []
    for d in (3, 4, 5):
        for M in (1.0, 2.0, 5.0):
            for l in range(4):
                for t in range(1, 41):
                    b = rw_kernel.composition_sum(t, l, M, d)
                    check(failures, b.holds,
                          f"bound violated at t={t} l={l} M={M} d={d}: "
                          f"{b.lhs!r} > {b.rhs!r}")
                    if l == 0 and t >= M:
                        check(failures, b.lhs == t ** (-d / 2),
                              f"l=0 base case not exact at t={t} d={d}")
    finish(failures, time.perf_counter() - start, 60)


def test_criterion_11_lclt_lower_bound():
    start = time.perf_counter()
    cal = rw_kernel.lclt_calibration(d=3, sigma=0.8, sigma_tilde=0.85,
                                     fit_lo=30, fit_hi=100, test_hi=200)
    failures = []
    check(failures, cal.holds,
          f"LCLT lower bound violated on held-out range; worst ratio "
          f"{cal.worst_ratio!r}")
    finish(failures, time.perf_counter() - start, 300)
