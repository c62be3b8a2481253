"""Hot numeric kernels with numba-compiled and pure-numpy implementations.

The compiled path is used when numba imports successfully and the environment
variable ACBO_NUMBA is not "0". Both paths compute identical quantities; the
numpy fallback keeps the package fully functional without a JIT. See
benchmarks/accel_bench.py for a timing comparison.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("ACBO_NUMBA", "1") != "0"

try:  # pragma: no cover - exercised indirectly
    if not _FLAG:
        raise ImportError
    os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")
    from numba import njit, prange

    NUMBA_ENABLED = True
except ImportError:  # pragma: no cover
    NUMBA_ENABLED = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap

    prange = range


# ---------------------------------------------------------------------------
# kernel cross-covariance matrices
# ---------------------------------------------------------------------------

def rbf_cross_numpy(x, z, inv_ls, var):
    """RBF cross-covariance, k[i,j] = var * exp(-0.5 * ||(x_i - z_j)/ls||^2)."""
    xs = x * inv_ls
    zs = z * inv_ls
    sq = (
        np.sum(xs * xs, axis=1)[:, None]
        + np.sum(zs * zs, axis=1)[None, :]
        - 2.0 * (xs @ zs.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return var * np.exp(-0.5 * sq)


@njit(cache=True, fastmath=True, parallel=True)
def _rbf_cross_nb(x, z, inv_ls, var):  # pragma: no cover - jitted
    n, d = x.shape
    m = z.shape[0]
    out = np.empty((n, m))
    for i in prange(n):
        for j in range(m):
            s = 0.0
            for k in range(d):
                t = (x[i, k] - z[j, k]) * inv_ls[k]
                s += t * t
            out[i, j] = var * np.exp(-0.5 * s)
    return out


def matern52_cross_numpy(x, z, inv_ls, var):
    """Matern-5/2 cross-covariance on scaled distances."""
    xs = x * inv_ls
    zs = z * inv_ls
    sq = (
        np.sum(xs * xs, axis=1)[:, None]
        + np.sum(zs * zs, axis=1)[None, :]
        - 2.0 * (xs @ zs.T)
    )
    np.maximum(sq, 0.0, out=sq)
    r = np.sqrt(sq)
    s5 = np.sqrt(5.0) * r
    return var * (1.0 + s5 + (5.0 / 3.0) * sq) * np.exp(-s5)


@njit(cache=True, fastmath=True, parallel=True)
def _matern52_cross_nb(x, z, inv_ls, var):  # pragma: no cover - jitted
    n, d = x.shape
    m = z.shape[0]
    sqrt5 = np.sqrt(5.0)
    out = np.empty((n, m))
    for i in prange(n):
        for j in range(m):
            s = 0.0
            for k in range(d):
                t = (x[i, k] - z[j, k]) * inv_ls[k]
                s += t * t
            r = np.sqrt(s)
            out[i, j] = var * (1.0 + sqrt5 * r + (5.0 / 3.0) * s) * np.exp(-sqrt5 * r)
    return out


def linear_cross_numpy(x, z, inv_ls, var):
    """Dimension-averaged linear kernel, k = var * <x/ls, z/ls> / d."""
    d = max(x.shape[1], 1)
    return (var / d) * ((x * inv_ls) @ (z * inv_ls).T)


# below this many output cells the jit dispatch overhead dominates
_JIT_MIN_CELLS = 150_000


def rbf_cross(x, z, inv_ls, var):
    if NUMBA_ENABLED and x.shape[0] * z.shape[0] >= _JIT_MIN_CELLS:
        return _rbf_cross_nb(
            np.ascontiguousarray(x), np.ascontiguousarray(z), inv_ls, var
        )
    return rbf_cross_numpy(x, z, inv_ls, var)


def matern52_cross(x, z, inv_ls, var):
    if NUMBA_ENABLED and x.shape[0] * z.shape[0] >= _JIT_MIN_CELLS:
        return _matern52_cross_nb(
            np.ascontiguousarray(x), np.ascontiguousarray(z), inv_ls, var
        )
    return matern52_cross_numpy(x, z, inv_ls, var)


def linear_cross(x, z, inv_ls, var):
    # BLAS already owns this one; no jitted variant.
    return linear_cross_numpy(x, z, inv_ls, var)


# ---------------------------------------------------------------------------
# shared-mobility day simulation
# ---------------------------------------------------------------------------

def sms_day_numpy(starts, ends, depot_xy, bikes, radius):
    """Process one day of trips in order; returns (fulfilled depot per trip or -1,
    destination depot per trip or -1). Mutates ``bikes`` in place."""
    n_trips = starts.shape[0]
    src = np.full(n_trips, -1, dtype=np.int64)
    dst = np.full(n_trips, -1, dtype=np.int64)
    r2 = radius * radius
    for t in range(n_trips):
        dx = depot_xy[:, 0] - starts[t, 0]
        dy = depot_xy[:, 1] - starts[t, 1]
        d2 = dx * dx + dy * dy
        d2_stocked = np.where(bikes > 0, d2, np.inf)
        j = int(np.argmin(d2_stocked))
        if d2_stocked[j] <= r2:
            ex = depot_xy[:, 0] - ends[t, 0]
            ey = depot_xy[:, 1] - ends[t, 1]
            k = int(np.argmin(ex * ex + ey * ey))
            bikes[j] -= 1
            bikes[k] += 1
            src[t] = j
            dst[t] = k
    return src, dst


@njit(cache=True)
def _sms_day_nb(starts, ends, depot_xy, bikes, radius):  # pragma: no cover - jitted
    n_trips = starts.shape[0]
    n_dep = depot_xy.shape[0]
    src = np.full(n_trips, -1, dtype=np.int64)
    dst = np.full(n_trips, -1, dtype=np.int64)
    r2 = radius * radius
    for t in range(n_trips):
        best = -1
        best_d2 = np.inf
        for j in range(n_dep):
            if bikes[j] <= 0:
                continue
            dx = depot_xy[j, 0] - starts[t, 0]
            dy = depot_xy[j, 1] - starts[t, 1]
            d2 = dx * dx + dy * dy
            if d2 < best_d2:
                best_d2 = d2
                best = j
        if best >= 0 and best_d2 <= r2:
            kbest = 0
            kd2 = np.inf
            for j in range(n_dep):
                ex = depot_xy[j, 0] - ends[t, 0]
                ey = depot_xy[j, 1] - ends[t, 1]
                e2 = ex * ex + ey * ey
                if e2 < kd2:
                    kd2 = e2
                    kbest = j
            bikes[best] -= 1
            bikes[kbest] += 1
            src[t] = best
            dst[t] = kbest
    return src, dst


def sms_day(starts, ends, depot_xy, bikes, radius):
    if NUMBA_ENABLED:
        return _sms_day_nb(starts, ends, depot_xy, bikes, float(radius))
    return sms_day_numpy(starts, ends, depot_xy, bikes, float(radius))
