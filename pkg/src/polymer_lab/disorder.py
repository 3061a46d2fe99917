"""Specification and reproducible sampling of the i.i.d. potential.

The potential xi(x, t) is generated counter-based: the value at a cell is a
pure function of (master seed, x, t), so disjoint regions can be generated
independently and region shifts never change the value at a fixed absolute
cell.  Closed forms for the exponential moment c(beta) and the normalized
field variance lambda are exact per family.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _engine
from .errors import ConfigError, DomainError, RegionError, ResourceLimitError


@dataclass(frozen=True)
class DisorderSpec:
    """Distribution family for xi plus inverse temperature and master seed.

    family is one of "rademacher", "gaussian", "uniform", "finite".
    "uniform" is symmetric on [-a, a] with half_width a; "finite" takes
    explicit (values, weights).
    """

    family: str = "rademacher"
    beta: float = 0.3
    seed: int = 0
    half_width: float = 1.0
    values: tuple = ()
    weights: tuple = ()

    def __post_init__(self):
        if self.family not in ("rademacher", "gaussian", "uniform", "finite"):
            raise ConfigError(f"unknown disorder family {self.family!r}")
        if self.beta < 0:
            raise ConfigError("beta must be >= 0")
        if self.family == "uniform" and self.half_width <= 0:
            raise ConfigError("uniform half_width must be > 0")
        if self.family == "finite":
            v = np.asarray(self.values, dtype=float)
            w = np.asarray(self.weights, dtype=float)
            if len(v) == 0 or len(v) != len(w):
                raise ConfigError("finite family needs matching values/weights")
            if not np.all(np.isfinite(v)):
                raise ConfigError("finite family values must be finite")
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise ConfigError("finite family weights must be >= 0 and sum to 1")


def c_beta(spec: DisorderSpec, multiplier: int = 1) -> float:
    """Exponential moment <e^{m beta xi}> in closed form."""
    if multiplier not in (1, 2):
        raise DomainError("multiplier must be 1 or 2")
    b = multiplier * spec.beta
    if b == 0.0:
        return 1.0
    if spec.family == "rademacher":
        return float(np.cosh(b))
    if spec.family == "gaussian":
        return float(np.exp(b * b / 2.0))
    if spec.family == "uniform":
        a = spec.half_width
        return float(np.sinh(a * b) / (a * b))
    w = np.asarray(spec.weights, dtype=float)
    v = np.asarray(spec.values, dtype=float)
    return float((w * np.exp(b * v)).sum())


def lambda_of(spec: DisorderSpec) -> float:
    """Variance of the normalized field: lambda = c(2 beta)/c(beta)^2 - 1."""
    c1 = c_beta(spec, 1)
    c2 = c_beta(spec, 2)
    lam = c2 / (c1 * c1) - 1.0
    # Cauchy-Schwarz gives lambda >= 0; only rounding can dip below
    if lam < -1e-15:
        raise AssertionError(f"negative lambda {lam!r} violates Cauchy-Schwarz")
    return max(lam, 0.0)


def weak_disorder_margin(spec: DisorderSpec, d: int, tol: float = 1e-8) -> float:
    """alpha_d * lambda; weak disorder requires this to be < 1."""
    from . import rw_kernel

    if d < 3:
        raise DomainError("weak_disorder_margin requires d >= 3")
    lam = lambda_of(spec)
    if lam == 0.0:
        return 0.0
    return rw_kernel.alpha_d(d, tol) * lam


@dataclass(frozen=True)
class Region:
    """Space box prod_k [lo_k, hi_k] (inclusive) times [t_lo, t_hi]."""

    lo: tuple[int, ...]
    hi: tuple[int, ...]
    t_lo: int
    t_hi: int

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ConfigError("region lo/hi dimension mismatch")
        if any(l > h for l, h in zip(self.lo, self.hi)) or self.t_lo > self.t_hi:
            raise ConfigError("empty region")

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    def contains(self, z, s: int) -> bool:
        if not self.t_lo <= s <= self.t_hi:
            return False
        return all(l <= int(c) <= h for c, l, h in zip(z, self.lo, self.hi))


# streams reserved for disorder generation
_STREAM_XI = 0
_STREAM_XI_AUX = 1


class DisorderField:
    """Lazy view of xi (through h) over a region for one realization.

    Values are recomputed on demand from (seed, x, t); nothing beyond the
    spec and region is stored, so fields are cheap and safely shareable.
    """

    def __init__(self, spec: DisorderSpec, region: Region,
                 memory_budget: int = 4 << 30):
        # values are generated lazily per time slice, so the budget applies
        # to the largest single box a caller can request
        cells = int(np.prod(region.shape))
        if cells * 8 > memory_budget:
            raise ResourceLimitError(
                f"region slice has {cells} cells, exceeding the "
                f"{memory_budget}-byte budget"
            )
        self.spec = spec
        self.region = region
        c1 = c_beta(spec, 1)
        self._c1 = c1
        self._lam = lambda_of(spec)
        if spec.family == "rademacher":
            b = spec.beta
            self._fac_p = float(np.exp(b) / np.cosh(b)) if b else 1.0
            self._fac_m = float(np.exp(-b) / np.cosh(b)) if b else 1.0

    @property
    def lam(self) -> float:
        return self._lam

    def _check_box(self, lo, shape, t: int):
        hi = tuple(l + n - 1 for l, n in zip(lo, shape))
        r = self.region
        if t < r.t_lo or t > r.t_hi or any(
            bl < rl or bh > rh for bl, bh, rl, rh in zip(lo, hi, r.lo, r.hi)
        ):
            raise RegionError(
                f"box lo={lo}, shape={shape}, t={t} outside field region"
            )

    def xi_box(self, lo, shape, t: int, seeds=None) -> np.ndarray:
        """Raw potential values on a box at time t, one layer per seed."""
        self._check_box(lo, shape, t)
        return self._xi_box_unchecked(lo, shape, t, seeds)

    def _seeds(self, seeds, stream=_STREAM_XI):
        if seeds is None:
            seeds = [self.spec.seed]
        return _engine.stream_seeds(np.asarray(seeds, dtype=np.uint64), stream)

    def _xi_box_unchecked(self, lo, shape, t, seeds=None):
        s = self.spec
        if s.family == "rademacher":
            bits = _engine.hash_box(self._seeds(seeds), t, lo, shape) >> np.uint64(63)
            return np.where(bits.astype(bool), 1.0, -1.0)
        if s.family == "gaussian":
            u1 = _engine.uniform01(self._seeds(seeds), t, lo, shape)
            u2 = _engine.uniform01(self._seeds(seeds, _STREAM_XI_AUX), t, lo, shape)
            return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
        u = _engine.uniform01(self._seeds(seeds), t, lo, shape)
        if s.family == "uniform":
            return s.half_width * (2.0 * u - 1.0)
        w = np.asarray(s.weights, dtype=float)
        v = np.asarray(s.values, dtype=float)
        edges = np.cumsum(w)
        idx = np.searchsorted(edges, u, side="left")
        return v[np.minimum(idx, len(v) - 1)]

    def factor_box(self, lo, shape, t: int, seeds=None) -> np.ndarray:
        """Transfer-matrix site factors 1 + h = e^{beta xi} / c(beta)."""
        self._check_box(lo, shape, t)
        s = self.spec
        if s.beta == 0.0:
            n = 1 if seeds is None else len(seeds)
            return np.ones((n,) + tuple(shape))
        if s.family == "rademacher":
            return _engine.fill_fac_pm(
                self._seeds(seeds), t, lo, shape, self._fac_p, self._fac_m
            )
        xi = self._xi_box_unchecked(lo, shape, t, seeds)
        return np.exp(s.beta * xi) / self._c1

    def h_box(self, lo, shape, t: int, seeds=None) -> np.ndarray:
        """Normalized field h = (e^{beta xi} - c(beta)) / c(beta)."""
        return self.factor_box(lo, shape, t, seeds) - 1.0

    def h_value(self, z, s: int, seed=None) -> float:
        """Single-cell h; errors if (z, s) lies outside the region."""
        z = tuple(int(c) for c in z)
        if not self.region.contains(z, s):
            raise RegionError(f"cell {z}, t={s} outside field region")
        seeds = None if seed is None else [seed]
        return float(self.h_box(z, (1,) * len(z), s, seeds).ravel()[0])


def sample_field(spec: DisorderSpec, region: Region,
                 memory_budget: int = 4 << 30) -> DisorderField:
    return DisorderField(spec, region, memory_budget)
