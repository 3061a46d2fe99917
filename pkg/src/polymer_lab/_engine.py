"""Low-level numerical engine: counter-based hashing and lattice stencils.

Everything here is a pure function of its inputs.  The d=3 hot paths are
numba-compiled; every operation has a generic-d numpy fallback with the same
floating-point summation order so results are identical where both apply.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*a, **k):
        def deco(f):
            return f

        return deco if not (len(a) == 1 and callable(a[0])) else a[0]


_GOLD = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1

# coordinate packing limits for the d<=3 fast path
_COORD_OFF = 8192       # coords must lie in [-8192, 8191]
_TIME_OFF = 1 << 20     # times must lie in [-2^20, 2^20)


def mix64(x):
    """splitmix64 finalizer, vectorized over uint64 arrays."""
    x = np.asarray(x, dtype=np.uint64).copy()
    x ^= x >> np.uint64(30)
    x *= np.uint64(_M1)
    x ^= x >> np.uint64(27)
    x *= np.uint64(_M2)
    x ^= x >> np.uint64(31)
    return x


def stream_seeds(seeds, stream: int):
    """Derive an independent seed per (seed, stream) pair."""
    s = np.asarray(seeds, dtype=np.uint64)
    return mix64(s + np.uint64((stream * _GOLD) & _MASK))


@njit(cache=True, inline="always")
def _mix_nb(x):
    x ^= x >> 30
    x = (x * _M1) & _MASK
    x ^= x >> 27
    x = (x * _M2) & _MASK
    x ^= x >> 31
    return x


@njit(cache=True)
def _hash_box_3d(seeds, t, lo0, lo1, lo2, out):
    B, n0, n1, n2 = out.shape
    tpack = np.uint64((t + _TIME_OFF) << 42)
    for b in range(B):
        s = (seeds[b] * _GOLD) & _MASK
        for i in range(n0):
            p0 = np.uint64(i + lo0 + _COORD_OFF)
            for j in range(n1):
                base = tpack | p0 | np.uint64((j + lo1 + _COORD_OFF) << 14)
                for k in range(n2):
                    u = base | np.uint64((k + lo2 + _COORD_OFF) << 28)
                    x = _mix_nb((s + u) & _MASK)
                    out[b, i, j, k] = _mix_nb((x + _GOLD) & _MASK)


@njit(cache=True)
def _fill_fac_pm_3d(seeds, t, lo0, lo1, lo2, fp, fm, out):
    """Two-point factor field: fp where the hash sign bit is set, else fm."""
    B, n0, n1, n2 = out.shape
    tpack = np.uint64((t + _TIME_OFF) << 42)
    for b in range(B):
        s = (seeds[b] * _GOLD) & _MASK
        for i in range(n0):
            p0 = np.uint64(i + lo0 + _COORD_OFF)
            for j in range(n1):
                base = tpack | p0 | np.uint64((j + lo1 + _COORD_OFF) << 14)
                for k in range(n2):
                    u = base | np.uint64((k + lo2 + _COORD_OFF) << 28)
                    x = _mix_nb((s + u) & _MASK)
                    x = _mix_nb((x + _GOLD) & _MASK)
                    if x >> 63:
                        out[b, i, j, k] = fp
                    else:
                        out[b, i, j, k] = fm


@njit(cache=True)
def _step_fac_3d(w, fac, out, inv2d):
    """One transfer-matrix step with site factors; w/out carry a zero halo."""
    B, m0, m1, m2 = w.shape
    for b in range(B):
        for i in range(1, m0 - 1):
            for j in range(1, m1 - 1):
                for k in range(1, m2 - 1):
                    acc = (w[b, i - 1, j, k] + w[b, i + 1, j, k]
                           + w[b, i, j - 1, k] + w[b, i, j + 1, k]
                           + w[b, i, j, k - 1] + w[b, i, j, k + 1])
                    out[b, i, j, k] = acc * inv2d * fac[b, i - 1, j - 1, k - 1]


@njit(cache=True)
def _step_3d(w, out, inv2d):
    B, m0, m1, m2 = w.shape
    for b in range(B):
        for i in range(1, m0 - 1):
            for j in range(1, m1 - 1):
                for k in range(1, m2 - 1):
                    acc = (w[b, i - 1, j, k] + w[b, i + 1, j, k]
                           + w[b, i, j - 1, k] + w[b, i, j + 1, k]
                           + w[b, i, j, k - 1] + w[b, i, j, k + 1])
                    out[b, i, j, k] = acc * inv2d


def hash_box(seeds, t: int, lo, shape, stream: int = 0):
    """uint64 hash grid for cells (x, t), x in the box lo + [0, shape).

    The value at a cell is a pure function of (seed, stream, x, t); disjoint
    cells come from distinct counters of the same keyed permutation.
    """
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
    if stream != 0:
        seeds = stream_seeds(seeds, stream)
    d = len(shape)
    out = np.empty((len(seeds),) + tuple(shape), dtype=np.uint64)
    if HAVE_NUMBA and d == 3 and _packable(t, lo, shape):
        _hash_box_3d(seeds, t, lo[0], lo[1], lo[2], out)
        return out
    # generic path: sequential mixing over (t, x_1, ..., x_d)
    acc = mix64(seeds * np.uint64(_GOLD) + np.uint64((t + _TIME_OFF) & _MASK))
    acc = acc.reshape((len(seeds),) + (1,) * d)
    grids = np.meshgrid(
        *[np.arange(lo[k], lo[k] + shape[k], dtype=np.int64) for k in range(d)],
        indexing="ij",
    )
    for g in grids:
        acc = mix64(acc + g.astype(np.uint64))
    return np.ascontiguousarray(np.broadcast_to(acc, out.shape))


def _packable(t, lo, shape) -> bool:
    if not (-_TIME_OFF <= t < _TIME_OFF):
        return False
    for k in range(len(shape)):
        if lo[k] < -_COORD_OFF or lo[k] + shape[k] > _COORD_OFF:
            return False
    return True


def uniform01(seeds, t, lo, shape, stream=0):
    """Uniform variates on (0, 1], one per cell."""
    h = hash_box(seeds, t, lo, shape, stream=stream)
    return (h.astype(np.float64) + 1.0) * 2.0**-64


def fill_fac_pm(seeds, t: int, lo, shape, fp: float, fm: float):
    """Sign-bit two-point field (Rademacher fast path)."""
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
    d = len(shape)
    if HAVE_NUMBA and d == 3 and _packable(t, lo, shape):
        out = np.empty((len(seeds),) + tuple(shape), dtype=np.float64)
        _fill_fac_pm_3d(seeds, t, lo[0], lo[1], lo[2], fp, fm, out)
        return out
    bits = hash_box(seeds, t, lo, shape) >> np.uint64(63)
    return np.where(bits.astype(bool), fp, fm)


def step(w, out, d: int, fac=None):
    """One simple-random-walk transfer step: out = avg-of-neighbors(w) [* fac].

    ``w`` and ``out`` are (B, n_1+2, ..., n_d+2) arrays with a permanent zero
    halo; ``fac`` is unpadded (B, n_1, ..., n_d).
    """
    inv2d = 1.0 / (2 * d)
    if HAVE_NUMBA and d == 3:
        if fac is None:
            _step_3d(w, out, inv2d)
        else:
            _step_fac_3d(w, fac, out, inv2d)
        return
    inner = (slice(None),) + (slice(1, -1),) * d
    acc = out[inner]
    acc[:] = 0.0
    for ax in range(1, d + 1):
        lo = list(inner)
        hi = list(inner)
        lo[ax] = slice(0, -2)
        hi[ax] = slice(2, None)
        acc += w[tuple(lo)]
        acc += w[tuple(hi)]
    acc *= inv2d
    if fac is not None:
        acc *= fac


def padded(B: int, shape) -> np.ndarray:
    """Zero array with a 1-cell halo around the spatial box."""
    return np.zeros((B,) + tuple(n + 2 for n in shape))


def interior(w) -> np.ndarray:
    d = w.ndim - 1
    return w[(slice(None),) + (slice(1, -1),) * d]
