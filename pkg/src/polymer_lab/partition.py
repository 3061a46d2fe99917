"""Transfer-matrix computation of polymer partition functions.

All three partition functions come from one stencil recursion on a spatial
box with a zero halo.  Evolution supports a seed batch so Monte-Carlo
harnesses reuse the same compiled kernels; single-realization callers get a
batch of one.  Two independent exact second-moment oracles (replica pair
walk and squared-kernel chaos recursion) live here as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _engine, rw_kernel
from .disorder import DisorderField, DisorderSpec, lambda_of
from .errors import DomainError, RegionError, ResourceLimitError


@dataclass
class PartitionSlice:
    """Weights W_j(z) on a box at a fixed time, one layer per seed.

    ``values`` has shape (B, n_1, ..., n_d); lattice point z maps to index
    z - lo componentwise.  Zero outside the box (walk cone or truncation).
    """

    time: int
    origin: tuple  # (x, s) for forward slices, (y, t) for backward ones
    lo: tuple[int, ...]
    values: np.ndarray

    @property
    def batch(self) -> int:
        return self.values.shape[0]

    def value(self, z, b: int = 0) -> float:
        idx = tuple(int(c) - l for c, l in zip(z, self.lo))
        if any(i < 0 or i >= n for i, n in zip(idx, self.values.shape[1:])):
            return 0.0
        return float(self.values[(b,) + idx])

    def total(self, b: int | None = None):
        """Box sum (point-to-plane value), compensated per realization."""
        if b is not None:
            return math.fsum(self.values[b].ravel())
        return np.array([math.fsum(self.values[i].ravel()) for i in range(self.batch)])

    def totals_fast(self) -> np.ndarray:
        """Pairwise-summed box sums for batched Monte-Carlo work."""
        return self.values.reshape(self.batch, -1).sum(axis=1)


def _evolve(
    field: DisorderField,
    center,
    t_start: int,
    t_end: int,
    step_dir: int,
    seeds,
    radius: int | None,
    memory_budget: int = 4 << 30,
    box=None,
):
    """Shared forward/backward recursion.

    Runs from t_start to t_end in steps of step_dir (+1 or -1), applying the
    site factor at every time including both endpoints.  Returns the padded
    weight array and the box lower corner.  ``box`` = (lo, shape) overrides
    the symmetric radius when an off-center box is cheaper.
    """
    duration = abs(t_end - t_start)
    center = tuple(int(c) for c in center)
    d = len(center)
    seeds_arr = None if seeds is None else np.asarray(seeds, dtype=np.uint64)
    B = 1 if seeds_arr is None else len(seeds_arr)
    if box is not None:
        lo = tuple(int(c) for c in box[0])
        shape = tuple(int(n) for n in box[1])
        if any(c < l or c >= l + n for c, l, n in zip(center, lo, shape)):
            raise DomainError("start point outside the supplied box")
    else:
        R = duration if radius is None else int(radius)
        if R < 0:
            raise DomainError("radius must be >= 0")
        shape = (2 * R + 1,) * d
        lo = tuple(c - R for c in center)
    if B * (np.prod(shape) + 1) * 8 * 2 > memory_budget:
        raise ResourceLimitError(
            f"evolution box {shape} x batch {B} exceeds memory budget"
        )
    # the full space-time cone must be inside the field region
    for j in (t_start, t_end):
        field._check_box(lo, shape, j)
    w = _engine.padded(B, shape)
    out = _engine.padded(B, shape)
    w[(slice(None),) + tuple(c - l + 1 for c, l in zip(center, lo))] = 1.0
    fac = field.factor_box(lo, shape, t_start, seeds_arr)
    _engine.interior(w)[:] *= fac
    j = t_start
    while j != t_end:
        j += step_dir
        fac = field.factor_box(lo, shape, j, seeds_arr)
        _engine.step(w, out, d, fac=fac)
        w, out = out, w
    return w, lo


def forward_evolve(
    field: DisorderField,
    x,
    s: int,
    t: int,
    seeds=None,
    radius: int | None = None,
    box=None,
) -> PartitionSlice:
    """Evolve W from the point (x, s) up to time t.

    The returned slice satisfies W_t(y) = Z_{x,s}^{y,t} and its box sum is
    the point-to-plane value Z_{x,s}^t.  With radius=None the box covers the
    walk cone exactly (no truncation error); a smaller radius or explicit
    box trades an absorbing boundary for speed.
    """
    if s > t:
        raise DomainError("forward_evolve needs s <= t")
    w, lo = _evolve(field, x, s, t, +1, seeds, radius, box=box)
    return PartitionSlice(t, (tuple(int(c) for c in x), s), lo, _engine.interior(w))


def backward_evolve(
    field: DisorderField,
    y,
    t: int,
    s: int,
    seeds=None,
    radius: int | None = None,
    box=None,
) -> PartitionSlice:
    """Mirror recursion from the endpoint (y, t) down to time s.

    The box sum of the returned slice is the plane-to-point value Z_s^{y,t}.
    """
    if s > t:
        raise DomainError("backward_evolve needs s <= t")
    w, lo = _evolve(field, y, t, s, -1, seeds, radius, box=box)
    return PartitionSlice(s, (tuple(int(c) for c in y), t), lo, _engine.interior(w))


def point_to_point(field: DisorderField, x, s: int, y, t: int, seeds=None):
    """Z_{x,s}^{y,t}; exact zero off the parity cone."""
    y = tuple(int(c) for c in y)
    x = tuple(int(c) for c in x)
    l1 = sum(abs(a - b) for a, b in zip(x, y))
    if l1 > t - s or (l1 - (t - s)) % 2 != 0:
        if seeds is None:
            return 0.0
        return np.zeros(len(seeds))
    sl = forward_evolve(field, x, s, t, seeds=seeds)
    vals = np.array([sl.value(y, b) for b in range(sl.batch)])
    return float(vals[0]) if seeds is None else vals


def replica_second_moment(
    spec: DisorderSpec, tau: int, d: int = 3, memory_budget: int = 4 << 30
) -> float:
    """Exact <(Z_{0,0}^tau)^2> via the two-replica displacement walk.

    The displacement of two independent walks is a two-step walk per time
    unit, so each replica step is two stencil applications; coincidences at
    displacement 0 contribute a factor (1 + lambda) each, including time 0.
    """
    if tau < 0:
        raise DomainError("tau must be >= 0")
    lam = lambda_of(spec)
    if lam == 0.0:
        return 1.0
    return _replica_second_moment_d(lam, tau, d, memory_budget)


def _replica_second_moment_d(
    lam: float, tau: int, d: int, memory_budget: int = 4 << 30
) -> float:
    R = 2 * tau
    shape = (2 * R + 1,) * d
    if int(np.prod(shape)) * 8 * 2 > memory_budget:
        raise ResourceLimitError(f"replica displacement grid {shape} too large")
    w = _engine.padded(1, shape)
    out = _engine.padded(1, shape)
    center = (0,) + (R + 1,) * d
    w[center] = 1.0 + lam
    for _ in range(tau):
        _engine.step(w, out, d)
        _engine.step(out, w, d)
        w[center] *= 1.0 + lam
    return float(math.fsum(_engine.interior(w)[0].ravel()))


def replica_pair_covariance(
    spec: DisorderSpec,
    y,
    tau: int,
    d: int = 3,
    memory_budget: int = 4 << 30,
) -> float:
    """Exact cov(Z_{0,0}^tau, Z_{y,0}^tau) via the displacement walk.

    The two replicas start at displacement y; coincidences contribute a
    factor (1 + lambda) each, including the start when y = 0.  With y = 0
    this is replica_second_moment minus 1.  Quantifies the finite-horizon
    bias of Monte-Carlo covariance proxies against the limiting closed form.
    """
    if tau < 0:
        raise DomainError("tau must be >= 0")
    y = tuple(int(c) for c in y)
    if len(y) != d:
        raise DomainError(f"offset {y} has wrong dimension (expected {d})")
    lam = lambda_of(spec)
    if lam == 0.0:
        return 0.0
    R = 2 * tau + max((abs(c) for c in y), default=0)
    shape = (2 * R + 1,) * d
    if int(np.prod(shape)) * 8 * 2 > memory_budget:
        raise ResourceLimitError(f"replica displacement grid {shape} too large")
    w = _engine.padded(1, shape)
    out = _engine.padded(1, shape)
    center = (0,) + (R + 1,) * d
    start = (0,) + tuple(c + R + 1 for c in y)
    w[start] = 1.0
    w[center] *= 1.0 + lam
    for _ in range(tau):
        _engine.step(w, out, d)
        _engine.step(out, w, d)
        w[center] *= 1.0 + lam
    return float(math.fsum(_engine.interior(w)[0].ravel())) - 1.0


def chaos_second_moment(
    spec: DisorderSpec, tau: int, d: int = 3, return_curve: bool = False
):
    """Exact <(Z_{0,0}^tau)^2> = 1 + M_tau from the squared-kernel recursion.

    M_tau sums lambda^r over pinning-time chains 0 <= i_1 < ... < i_r <= tau
    with squared-kernel gap weights; spatial sums telescope to q_{2*gap}^0,
    leaving a scalar convolution m_i = lambda (a_i + sum_j m_j a_{i-j}).
    """
    if tau < 0:
        raise DomainError("tau must be >= 0")
    lam = lambda_of(spec)
    if lam == 0.0:
        return (1.0, np.ones(tau + 1)) if return_curve else 1.0
    a = _origin_returns(d, tau)  # a[delta] = q_{2 delta}^0
    m = np.zeros(tau + 1)
    for i in range(tau + 1):
        acc = a[i]
        for j in range(i):
            acc += m[j] * a[i - j]
        m[i] = lam * acc
    M = np.cumsum(m)
    if return_curve:
        return float(1.0 + M[tau]), 1.0 + M
    return float(1.0 + M[tau])


_RETURNS_CACHE: dict[int, np.ndarray] = {}


def _origin_returns(d: int, tau: int) -> np.ndarray:
    """q_{2 delta}^0 for delta <= tau, exact (untruncated evolution)."""
    cached = _RETURNS_CACHE.get(d)
    if cached is not None and len(cached) > tau:
        return cached[: tau + 1]
    _, probes = rw_kernel.truncated_origin_run(
        d, 2 * tau, radius=2 * tau, probes=[np.zeros(d, int)]
    )
    a = probes[0, ::2].copy()
    _RETURNS_CACHE[d] = a
    return a
