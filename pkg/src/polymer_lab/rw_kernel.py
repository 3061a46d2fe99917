"""Exact and asymptotic analytics for the simple symmetric random walk on Z^d.

Kernel tables are built by exact one-step convolution; Green function values
and the pair-collision constant alpha_d combine exact partial sums with a
certified power-law tail completion, cross-checkable against an independent
Bessel-integral quadrature.  Exponential tilting, its Fourier identities and
the composition-sum estimate live here as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from . import _engine
from .errors import DomainError, NonConvergenceError, ResourceLimitError


# ---------------------------------------------------------------------------
# kernel tables


class KernelTable:
    """Dense per-time grids of transition probabilities q_t^z.

    Slice t has shape (2t+1,)*d and is indexed by z + t (componentwise).
    Immutable after construction; safe to share across readers.
    """

    def __init__(self, d: int, t_max: int, slices: list[np.ndarray]):
        self.d = d
        self.t_max = t_max
        self.slices = slices

    @classmethod
    def build(cls, d: int, t_max: int, memory_budget: int = 4 << 30) -> "KernelTable":
        if d < 1 or t_max < 0:
            raise DomainError(f"need d >= 1 and t_max >= 0, got d={d}, t_max={t_max}")
        need = sum((2 * t + 1) ** d for t in range(t_max + 1)) * 8
        if need > memory_budget:
            raise ResourceLimitError(
                f"kernel table d={d}, t_max={t_max} needs {need} bytes "
                f"(budget {memory_budget})"
            )
        slices = [np.ones((1,) * d)]
        for t in range(1, t_max + 1):
            prev = slices[-1]
            cur = np.zeros((2 * t + 1,) * d)
            for ax in range(d):
                lo = tuple(
                    slice(1, -1) if a != ax else slice(0, -2) for a in range(d)
                )
                hi = tuple(
                    slice(1, -1) if a != ax else slice(2, None) for a in range(d)
                )
                cur[lo] += prev
                cur[hi] += prev
            cur *= 1.0 / (2 * d)
            slices.append(cur)
        return cls(d, t_max, slices)

    def slice(self, t: int) -> np.ndarray:
        if not 0 <= t <= self.t_max:
            raise DomainError(f"time {t} outside table horizon {self.t_max}")
        return self.slices[t]

    def q(self, t: int, z) -> float:
        """q_t^z; exact zero off the parity cone."""
        s = self.slice(t)
        z = np.asarray(z, dtype=int)
        if np.abs(z).sum() > t or (np.abs(z).sum() - t) % 2 != 0:
            return 0.0
        return float(s[tuple(z + t)])

    def sum_sq(self, t: int) -> float:
        """Sum_z (q_t^z)^2, which equals q_{2t}^0."""
        s = self.slice(t)
        return float((s * s).sum())

    def total(self, t: int) -> float:
        return float(self.slice(t).sum())


def build_kernel_table(d: int, t_max: int, memory_budget: int = 4 << 30) -> KernelTable:
    return KernelTable.build(d, t_max, memory_budget)


def truncated_origin_run(d: int, t_max: int, radius: int, probes=()):
    """Evolve the walk from the origin on a box of the given radius.

    Returns (sum_sq, probe_values) where sum_sq[t] = sum_z q_t^z squared and
    probe_values[i][t] = q_t^{probes[i]}.  Truncation at the box boundary is
    absorbing, so every returned value is a lower bound on the exact one; the
    caller picks the radius so the loss is below its tolerance.
    """
    shape = (2 * radius + 1,) * d
    w = _engine.padded(1, shape)
    out = _engine.padded(1, shape)
    center = (0,) + (radius + 1,) * d
    w[center] = 1.0
    sum_sq = np.empty(t_max + 1)
    probe_vals = np.empty((len(probes), t_max + 1))
    idx = [
        (0,) + tuple(radius + 1 + int(c) for c in p) for p in probes
    ]
    inner = _engine.interior(w)
    sum_sq[0] = float((inner**2).sum())
    for i, ix in enumerate(idx):
        probe_vals[i, 0] = w[ix]
    for t in range(1, t_max + 1):
        _engine.step(w, out, d)
        w, out = out, w
        inner = _engine.interior(w)
        sum_sq[t] = float((inner**2).sum())
        for i, ix in enumerate(idx):
            probe_vals[i, t] = w[ix]
    return sum_sq, probe_vals


# ---------------------------------------------------------------------------
# Green function and alpha_d


def _tail_fit(a: np.ndarray, d: int, fit_lo: int, fit_hi: int, order: int) -> float:
    """Complete sum_{t > T} a_t assuming a_t ~ t^{-d/2} (c0 + c1/t + ...).

    a[t] holds the even-time return/visit weights q_{2t}^y; the completed
    tail is expressed with Hurwitz zeta values so no further truncation
    enters.
    """
    T = len(a) - 1
    ts = np.arange(fit_lo, fit_hi + 1, dtype=float)
    yv = a[fit_lo : fit_hi + 1] * ts ** (d / 2)
    X = np.stack([(fit_lo / ts) ** k for k in range(order)], axis=1)
    coef, *_ = np.linalg.lstsq(X, yv, rcond=None)
    return float(
        sum(
            coef[k] * fit_lo**k * special.zeta(d / 2 + k, T + 1)
            for k in range(order)
        )
    )


def _complete_series(a: np.ndarray, d: int, tol: float, t0: int = 1) -> float:
    """Partial sum of a[t0:] plus fitted tail, with a stability certificate."""
    T = len(a) - 1
    fit_hi = T
    fit_lo = max(4, T // 2)
    tail = _tail_fit(a, d, fit_lo, fit_hi, order=5)
    # two cheaper variants gauge the completion error
    alt1 = _tail_fit(a, d, fit_lo, fit_hi, order=4)
    alt2 = _tail_fit(a, d, max(4, (2 * T) // 3), fit_hi, order=5)
    cert = 4.0 * (abs(tail - alt1) + abs(tail - alt2)) + 1e-13
    if cert > tol:
        raise NonConvergenceError(
            f"tail completion certificate {cert:.3e} exceeds tol {tol:.3e} "
            f"at horizon {T}"
        )
    return float(a[t0:].sum()) + tail


def complete_shifted_series(
    a: np.ndarray, d: int, y, tol: float, fit_lo: int | None = None,
    order: int = 6,
) -> float:
    """Complete sum_t a_t for a_t = q_{2t}^y style series with y != 0.

    Deflates the Gaussian factor exp(-g/t), g = d |y|^2 / 4, fits the smooth
    remainder as a polynomial in 1/t, and sums the tail semi-numerically
    (direct sum to ~2e6 plus a Hurwitz-zeta remainder with the exponential
    expanded).  A certificate from lower-order/shorter-window variants
    guards the requested tolerance.
    """
    T = len(a) - 1
    hi = T
    lo = fit_lo if fit_lo is not None else max(8, T // 2)
    g = d * float(sum(float(c) ** 2 for c in y)) / 4.0

    def fit_value(lo_, order_):
        ts = np.arange(lo_, hi + 1, dtype=float)
        b = a[lo_ : hi + 1] * np.exp(g / ts) * ts ** (d / 2)
        X = np.stack([(lo_ / ts) ** k for k in range(order_)], axis=1)
        coef, *_ = np.linalg.lstsq(X, b, rcond=None)
        N = 1 << 21
        tt = np.arange(T + 1, N + 1, dtype=float)
        poly = sum(coef[k] * (lo_ / tt) ** k for k in range(order_))
        tail = float((poly * np.exp(-g / tt) * tt ** (-d / 2)).sum())
        for k in range(order_):
            for j, cj in enumerate((1.0, -g, g * g / 2.0)):
                tail += coef[k] * lo_**k * cj * special.zeta(d / 2 + k + j, N + 1)
        return float(a.sum()) + tail

    val = fit_value(lo, order)
    alt1 = fit_value(lo, order - 1)
    alt2 = fit_value(max(4, (3 * lo) // 4), order)
    cert = abs(val - alt1) + abs(val - alt2) + 1e-13
    if cert > tol:
        raise NonConvergenceError(
            f"shifted tail certificate {cert:.3e} exceeds tol {tol:.3e} "
            f"at horizon {T}"
        )
    return val


def _default_horizon(d: int) -> int:
    return 96 if d == 3 else 48


def _run_radius(d: int, t_evolve: int, extra: int = 0) -> int:
    return int(np.ceil(7.5 * np.sqrt(t_evolve / d))) + extra


def green_value(d: int, y, tol: float = 1e-9, t_horizon: int | None = None) -> float:
    """Green's function G(0,y) = sum_{t>=0} q_{2t}^y for transient dimensions.

    Exact even-time partial sums from a truncated origin run, completed by a
    certified power-law tail fit.  Odd-parity y returns 0 (the even-time sum
    has no contributions).
    """
    if d < 3:
        raise DomainError("green_value requires d >= 3")
    y = np.asarray(y, dtype=int)
    if int(np.abs(y).sum()) % 2 == 1:
        return 0.0
    T = t_horizon or _default_horizon(d)
    T_cap = T if t_horizon else 4 * T
    while True:
        radius = _run_radius(d, 2 * T, extra=int(np.abs(y).max()))
        _, probes = truncated_origin_run(d, 2 * T, radius, probes=[y])
        a = probes[0, ::2].copy()  # a[t] = q_{2t}^y
        try:
            return complete_shifted_series(a, d, y, tol)
        except NonConvergenceError:
            if 2 * T > T_cap:
                raise
            T *= 2


def green_value_bessel(d: int, y, cutoff: float = 400.0, order: int = 10) -> float:
    """Independent oracle: G(0,y) = int_0^inf prod_j I_{|y_j|}(u/d) e^{-u} du.

    Quadrature on [0, cutoff] of the scaled-Bessel product plus an analytic
    asymptotic tail; agrees with the lattice-sum route to ~1e-12.
    """
    if d < 3:
        raise DomainError("green_value_bessel requires d >= 3")
    y = np.abs(np.asarray(y, dtype=int))
    if len(y) != d:
        raise DomainError("y must have d components")
    if int(y.sum()) % 2 == 1:
        return 0.0

    def integrand(u):
        z = u / d
        r = 1.0
        for nu in y:
            r = r * float(special.ive(int(nu), z))
        return r

    val = 0.0
    pts = [0.0, 1.0, 5.0, 20.0, 80.0, cutoff]
    for a_, b_ in zip(pts[:-1], pts[1:]):
        v, _ = integrate.quad(integrand, a_, b_, limit=200, epsabs=1e-14, epsrel=1e-13)
        val += v

    # asymptotic series of the scaled Bessel product in 1/z, z = u/d
    def acoef(nu: int) -> np.ndarray:
        c = np.zeros(order)
        c[0] = 1.0
        for k in range(1, order):
            c[k] = c[k - 1] * -(4 * nu * nu - (2 * k - 1) ** 2) / (k * 8.0)
        return c

    prod = np.zeros(order)
    prod[0] = 1.0
    for nu in y:
        c = acoef(int(nu))
        nxt = np.zeros(order)
        for i in range(order):
            for j in range(order - i):
                nxt[i + j] += prod[i] * c[j]
        prod = nxt
    Z = cutoff / d
    tail = 0.0
    for k in range(order):
        p = d / 2 + k
        tail += d * (2 * np.pi) ** (-d / 2) * prod[k] * Z ** (1 - p) / (p - 1)
    return val + tail


def alpha_d(
    d: int,
    tol: float = 1e-9,
    t_horizon: int | None = None,
    identity_tol: float = 1e-12,
) -> float:
    """Pair-collision constant: sum_{t>=1} sum_z (q_t^z)^2.

    Verifies sum_z (q_t^z)^2 = q_{2t}^0 per time step along the way (the two
    sides come from different times of the same run).
    """
    if d < 3:
        raise DomainError("alpha_d requires d >= 3")
    T = t_horizon or _default_horizon(d)
    T_cap = T if t_horizon else 4 * T
    while True:
        radius = _run_radius(d, 2 * T)
        sum_sq, probes = truncated_origin_run(
            d, 2 * T, radius, probes=[np.zeros(d, int)]
        )
        origin = probes[0]
        a = sum_sq[: T + 1].copy()  # a[t] = sum_z (q_t^z)^2
        for t in range(1, T + 1):
            lhs, rhs = a[t], origin[2 * t]
            if abs(lhs - rhs) > identity_tol * max(1.0, abs(rhs)):
                raise AssertionError(
                    f"squared-kernel identity broken at t={t}: {lhs!r} vs {rhs!r}"
                )
        try:
            return _complete_series(a, d, tol)
        except NonConvergenceError:
            if 2 * T > T_cap:
                raise
            T *= 2


# ---------------------------------------------------------------------------
# local CLT lower bound


def lclt_lower_bound(
    d: int, t: int, y, sigma_tilde: float, c1: float, c2: float
) -> float:
    """Gaussian-type lower bound evaluator used by calibration diagnostics."""
    if t < 1 or c1 <= 0 or c2 < 0:
        raise DomainError("need t >= 1, c1 > 0, c2 >= 0")
    if not 0.75 < sigma_tilde < 1:
        raise DomainError("sigma_tilde must lie in (3/4, 1)")
    y = np.asarray(y, dtype=float)
    nsq = float((y * y).sum())
    return (
        c1
        * (d / (2 * np.pi * t)) ** (d / 2)
        * np.exp(-d * nsq / (2 * t))
        * np.exp(-c2 * t ** (4 * sigma_tilde - 3))
    )


@dataclass
class LcltCalibration:
    d: int
    sigma: float
    sigma_tilde: float
    c1: float
    c2: float
    fit_range: tuple[int, int]
    test_range: tuple[int, int]
    holds: bool
    worst_ratio: float  # min over held-out points of q / bound (>= 1 iff holds)


def lclt_calibration(
    d: int = 3,
    sigma: float = 0.8,
    sigma_tilde: float = 0.85,
    fit_lo: int = 30,
    fit_hi: int = 100,
    test_hi: int = 200,
) -> LcltCalibration:
    """Fit (c1, c2) on [fit_lo, fit_hi], check the bound on (fit_hi, test_hi].

    The walk run is truncated, which only lowers the left-hand side q_t^y,
    so a passing check is conservative.
    """
    pw = 4 * sigma_tilde - 3
    radius = int(np.ceil(test_hi**sigma)) + int(np.ceil(5.0 * np.sqrt(test_hi / d)))
    shape = (2 * radius + 1,) * d
    w = _engine.padded(1, shape)
    out = _engine.padded(1, shape)
    w[(0,) + (radius + 1,) * d] = 1.0
    coords = np.indices(shape) - radius
    nsq = (coords.astype(float) ** 2).sum(axis=0)
    par = np.abs(coords).sum(axis=0) % 2

    def gauss(t):
        return (d / (2 * np.pi * t)) ** (d / 2) * np.exp(-d * nsq / (2 * t))

    # pass 1: fit
    log_margins = []  # per fit-time minimum of ln(q/gauss)
    fit_ts = []
    for t in range(1, fit_hi + 1):
        _engine.step(w, out, d)
        w, out = out, w
        if t < fit_lo:
            continue
        q = _engine.interior(w)[0]
        mask = (par == t % 2) & (nsq <= t ** (2 * sigma)) & (q > 0)
        g = np.log(q[mask]) - np.log(gauss(t)[mask])
        log_margins.append(float(g.min()))
        fit_ts.append(t)
    fit_ts = np.asarray(fit_ts, dtype=float)
    log_margins = np.asarray(log_margins)
    c2 = max(0.0, float((-log_margins / fit_ts**pw).max())) * 1.05 + 1e-12
    c1 = float(np.exp((log_margins + c2 * fit_ts**pw).min())) * 0.95

    # pass 2: held-out check
    holds = True
    worst = np.inf
    for t in range(fit_hi + 1, test_hi + 1):
        _engine.step(w, out, d)
        w, out = out, w
        q = _engine.interior(w)[0]
        mask = (par == t % 2) & (nsq <= t ** (2 * sigma)) & (q > 0)
        bound = c1 * gauss(t)[mask] * np.exp(-c2 * t**pw)
        ratio = float((q[mask] / bound).min())
        worst = min(worst, ratio)
        if ratio < 1.0:
            holds = False
    return LcltCalibration(
        d, sigma, sigma_tilde, c1, c2, (fit_lo, fit_hi), (fit_hi + 1, test_hi),
        holds, worst,
    )


# ---------------------------------------------------------------------------
# exponential tilting


@dataclass
class TiltState:
    z: tuple[int, ...]
    t: int
    phi: np.ndarray
    residual: float


def tilt_map(x: np.ndarray) -> np.ndarray:
    """F_k(x) = sinh(x_k) / sum_l cosh(x_l)."""
    x = np.asarray(x, dtype=float)
    return np.sinh(x) / np.cosh(x).sum()


def _tilt_jacobian(x: np.ndarray) -> np.ndarray:
    s = np.cosh(x).sum()
    sh = np.sinh(x)
    J = -np.outer(sh, sh) / (s * s)
    J[np.diag_indices_from(J)] += np.cosh(x) / s
    return J


_RHO_CACHE: dict[int, tuple[float, float]] = {}


def _newton(target: np.ndarray, tol: float, max_iter: int = 200):
    phi = np.zeros_like(target)
    res = tilt_map(phi) - target
    rnorm = np.abs(res).max()
    for _ in range(max_iter):
        if rnorm <= tol:
            return phi, rnorm
        delta = np.linalg.solve(_tilt_jacobian(phi), -res)
        lam = 1.0
        while lam > 1e-12:
            cand = phi + lam * delta
            cres = tilt_map(cand) - target
            cnorm = np.abs(cres).max()
            if cnorm < rnorm:
                phi, res, rnorm = cand, cres, cnorm
                break
            lam *= 0.5
        else:
            break
    return (phi, rnorm) if rnorm <= tol else (None, rnorm)


def estimate_tilt_radius(d: int) -> tuple[float, float]:
    """Empirical (rho1, rho2): invertibility radius and norm-growth constant.

    rho1 is chosen so every target z/t with norm <= rho1 has a preimage of
    norm <= 1 (forward images of the unit sphere bound the region, since
    |F| grows monotonically along rays).  rho2 bounds |phi| / |z/t| over
    that region.
    """
    if d in _RHO_CACHE:
        return _RHO_CACHE[d]
    dirs = [np.eye(d)[0], np.ones(d) / np.sqrt(d)]
    if d >= 2:
        v = np.zeros(d)
        v[:2] = 1.0 / np.sqrt(2.0)
        dirs.append(v)
    rho1 = min(float(np.linalg.norm(tilt_map(u))) for u in dirs)
    rho2 = max(
        s / float(np.linalg.norm(tilt_map(s * u)))
        for u in dirs
        for s in np.linspace(0.05, 1.0, 20)
    )
    result = (0.95 * rho1, rho2)
    _RHO_CACHE[d] = result
    return result


def tilt_solve(z, t: int, tol: float = 1e-12) -> TiltState:
    """Solve F(phi) = z/t by damped Newton from phi = 0."""
    if t < 1:
        raise DomainError("tilt_solve requires t >= 1")
    z = np.asarray(z, dtype=int)
    d = len(z)
    rho1, _ = estimate_tilt_radius(d)
    target = z / t
    if np.linalg.norm(target) > rho1:
        raise DomainError(
            f"|z|/t = {np.linalg.norm(target):.4f} outside calibrated "
            f"invertibility radius {rho1:.4f}"
        )
    phi, rnorm = _newton(target, tol)
    if phi is None:
        raise NonConvergenceError(
            f"tilt solver stalled at residual {rnorm:.3e} for z={tuple(z)}, t={t}"
        )
    return TiltState(tuple(int(c) for c in z), t, phi, rnorm)


def tilted_mass(
    phi, t: int, table: KernelTable | None = None, check_tol: float = 1e-10
) -> float:
    """Phi(0)^t with Phi(0) = (1/d) sum_j cosh(phi_j).

    When a table covering t is supplied, asserts equality with the direct
    lattice sum sum_y q_t^y e^{phi . y}.
    """
    if t < 0:
        raise DomainError("tilted_mass requires t >= 0")
    phi = np.asarray(phi, dtype=float)
    d = len(phi)
    val = float(np.cosh(phi).mean()) ** t
    if table is not None:
        lat = _tilted_lattice_sum(phi, t, table)
        if abs(lat - val) > check_tol * max(1.0, abs(val)):
            raise AssertionError(
                f"tilted mass mismatch at t={t}: closed form {val!r}, "
                f"lattice sum {lat!r}"
            )
    return val


def _tilted_lattice_sum(phi: np.ndarray, t: int, table: KernelTable) -> float:
    s = table.slice(t)
    d = table.d
    w = np.ones(s.shape)
    for ax in range(d):
        coords = np.arange(-t, t + 1, dtype=float)
        shape = [1] * d
        shape[ax] = 2 * t + 1
        w = w * np.exp(phi[ax] * coords).reshape(shape)
    return float((s * w).sum())


def _fourier_quadrature(z, t: int, phi, d: int) -> complex:
    """(2pi)^-d integral of Phi(theta)^t e^{-i theta.z} by exact DFT sum.

    Phi^t e^{-i theta.z} is a trigonometric polynomial of per-axis degree at
    most 2t, so the uniform rule with 2t+2 points per axis is exact.
    """
    n = 2 * t + 2
    theta = 2.0 * np.pi * np.arange(n) / n
    z = np.asarray(z, dtype=int)
    phi = np.asarray(phi, dtype=float)
    Phi = np.zeros((n,) * d, dtype=complex)
    for ax in range(d):
        shape = [1] * d
        shape[ax] = n
        term = (
            np.exp(1j * theta) * np.exp(phi[ax]) + np.exp(-1j * theta) * np.exp(-phi[ax])
        ).reshape(shape)
        Phi = Phi + term
    Phi /= 2 * d
    mode = np.ones((n,) * d, dtype=complex)
    for ax in range(d):
        shape = [1] * d
        shape[ax] = n
        mode = mode * np.exp(-1j * theta * z[ax]).reshape(shape)
    return complex((Phi**t * mode).mean())


def fourier_identity_check(
    z, t: int, phi, table: KernelTable, grid_budget: int = 1 << 27
) -> tuple[float, float]:
    """Return (q_t^z e^{phi.z}, quadrature value) for the Fourier identity."""
    if t < 0:
        raise DomainError("fourier_identity_check requires t >= 0")
    d = table.d
    if (2 * t + 2) ** d > grid_budget:
        raise ResourceLimitError(f"quadrature grid (2t+2)^d too large for t={t}")
    phi = np.asarray(phi, dtype=float)
    z = np.asarray(z, dtype=int)
    lhs = table.q(t, z) * float(np.exp(phi @ z))
    rhs = _fourier_quadrature(z, t, phi, d)
    return lhs, rhs.real


# ---------------------------------------------------------------------------
# ratio bound


@dataclass
class RatioReport:
    t: int
    t_prime: int
    z: tuple[int, ...]
    z_prime: tuple[int, ...]
    ratio: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.ratio <= self.bound


def ratio_bound_report(
    table: KernelTable, t: int, t_prime: int, z, z_prime, c: float, correction: float
) -> RatioReport:
    """Compare q_{t'}^{z'} / q_t^z against the tilt-based diagnostic bound."""
    z = np.asarray(z, dtype=int)
    zp = np.asarray(z_prime, dtype=int)
    qt = table.q(t, z)
    if qt == 0.0:
        raise DomainError(f"q_t^z vanishes for t={t}, z={tuple(z)}")
    ratio = table.q(t_prime, zp) / qt
    znorm = float(np.linalg.norm(z))
    bound = (1.0 + correction) * np.exp(
        c
        * (
            znorm / t * (float(np.linalg.norm(z - zp)) + abs(t_prime - t))
            + np.log(t) * abs(t - t_prime) / t
        )
    )
    return RatioReport(t, t_prime, tuple(int(v) for v in z), tuple(int(v) for v in zp),
                       float(ratio), float(bound))


# ---------------------------------------------------------------------------
# composition-sum estimate


@dataclass
class CompositionBound:
    t: int
    l: int
    M: float
    d: int
    lhs: float
    rhs: float
    c: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def composition_sum(t: int, l: int, M: float, d: int) -> CompositionBound:
    """Exact sum over compositions t_1+...+t_{l+1} = t with every part >= M
    of prod t_j^{-d/2}, against c^l M^{-l(d/2-1)} t^{-d/2}."""
    if t < 1 or l < 0 or M <= 0 or d < 3:
        raise DomainError("need t >= 1, l >= 0, M > 0, d >= 3")
    m0 = int(np.ceil(M))
    base = np.zeros(t + 1)
    # scalar pow keeps the l = 0 value bit-identical to t ** (-d / 2)
    for j in range(m0, t + 1):
        base[j] = float(j) ** (-d / 2)
    cur = base.copy()
    for _ in range(l):
        cur = np.convolve(cur, base)[: t + 1]
    lhs = float(cur[t])
    c = 2**d * max(special.zeta(d / 2, 1), 1.0 / (d / 2 - 1))
    rhs = float(c**l * M ** (-l * (d / 2 - 1)) * t ** (-d / 2))
    return CompositionBound(t, l, M, d, lhs, rhs, float(c))
