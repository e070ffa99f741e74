"""
Hot kernels with a numba path and a pure-numpy fallback.

Two loops dominate runtime: the sort-and-fill backup applied to every row
of an interval abstraction at every time step, and the Gaussian quadrature
sweep of the 1-D oracle. Each has an ``*_numba`` and an ``*_numpy``
implementation with identical semantics; the public names (``fill_values``,
``fill_witness``, ``gauss_quadrature``) are bound to one of them at import.

Set ``SAFEBOUNDS_NO_NUMBA=1`` to force the numpy path. The numba path is
also skipped silently when numba cannot be imported.
"""

import math
import os

import numpy as np

_DISABLED = os.environ.get("SAFEBOUNDS_NO_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
    "on",
}

try:
    if _DISABLED:
        raise ImportError("numba disabled by SAFEBOUNDS_NO_NUMBA")
    import numba
    from numba import njit, prange

    # the bundled TBB is often too old; prefer OpenMP, then numba's own pool
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA

# exp(-0.5 * z**2) underflows to exactly zero past this squared z-score
_Z2_CUTOFF = 1490.0


def _fill_values_numpy(order, values, lo, hi):
    t = _fill_witness_numpy(order, lo, hi)
    return t @ values


def _fill_witness_numpy(order, lo, hi):
    lo_o = lo[:, order]
    gap = hi[:, order] - lo_o
    budget = 1.0 - lo.sum(axis=1)
    before = np.cumsum(gap, axis=1) - gap
    step = np.minimum(np.maximum(budget[:, None] - before, 0.0), gap)
    t = np.empty_like(lo)
    t[:, order] = lo_o + step
    return t


def _gauss_quadrature_numpy(nodes, weights, f, mu, sigma, block=512):
    wf = weights * f
    out = np.empty(mu.shape[0])
    norm = 1.0 / (sigma * math.sqrt(2.0 * math.pi))
    for start in range(0, mu.shape[0], block):
        stop = min(start + block, mu.shape[0])
        z = (nodes[None, :] - mu[start:stop, None]) / sigma
        out[start:stop] = np.exp(-0.5 * z * z) @ wf
    return out * norm


if HAVE_NUMBA:

    @njit(parallel=True, cache=True)
    def _fill_values_numba(order, values, lo, hi):
        n_rows, n = lo.shape
        out = np.empty(n_rows)
        for r in prange(n_rows):
            budget = 1.0
            acc = 0.0
            for j in range(n):
                budget -= lo[r, j]
                acc += lo[r, j] * values[j]
            for jj in range(n):
                if budget <= 0.0:
                    break
                j = order[jj]
                gap = hi[r, j] - lo[r, j]
                step = gap if gap < budget else budget
                acc += step * values[j]
                budget -= step
            out[r] = acc
        return out

    @njit(parallel=True, cache=True)
    def _fill_witness_numba(order, lo, hi):
        n_rows, n = lo.shape
        t = lo.copy()
        for r in prange(n_rows):
            budget = 1.0
            for j in range(n):
                budget -= lo[r, j]
            for jj in range(n):
                if budget <= 0.0:
                    break
                j = order[jj]
                gap = hi[r, j] - lo[r, j]
                if gap < budget:
                    t[r, j] = hi[r, j]
                    budget -= gap
                else:
                    t[r, j] = lo[r, j] + budget
                    budget = 0.0
        return t

    @njit(parallel=True, cache=True)
    def _gauss_quadrature_numba(nodes, weights, f, mu, sigma):
        m = mu.shape[0]
        out = np.empty(m)
        norm = 1.0 / (sigma * math.sqrt(2.0 * math.pi))
        for i in prange(m):
            s = 0.0
            for j in range(nodes.shape[0]):
                z = (nodes[j] - mu[i]) / sigma
                z2 = z * z
                if z2 < _Z2_CUTOFF:
                    s += weights[j] * f[j] * math.exp(-0.5 * z2)
            out[i] = s * norm
        return out

else:
    _fill_values_numba = None
    _fill_witness_numba = None
    _gauss_quadrature_numba = None


def fill_values(order, values, lo, hi):
    """Sort-and-fill backup of every row against a shared visiting order.

    Each row starts at ``lo`` and raises entries toward ``hi`` in ``order``
    until the row sums to one; returns the dot product with ``values``.
    """
    order = np.ascontiguousarray(order, dtype=np.int64)
    values = np.ascontiguousarray(values, dtype=np.float64)
    lo = np.ascontiguousarray(lo, dtype=np.float64)
    hi = np.ascontiguousarray(hi, dtype=np.float64)
    if USE_NUMBA:
        return _fill_values_numba(order, values, lo, hi)
    return _fill_values_numpy(order, values, lo, hi)


def fill_witness(order, lo, hi):
    """Same fill as :func:`fill_values` but returns the distributions."""
    order = np.ascontiguousarray(order, dtype=np.int64)
    lo = np.ascontiguousarray(lo, dtype=np.float64)
    hi = np.ascontiguousarray(hi, dtype=np.float64)
    if USE_NUMBA:
        return _fill_witness_numba(order, lo, hi)
    return _fill_witness_numpy(order, lo, hi)


def gauss_quadrature(nodes, weights, f, mu, sigma):
    """For each mean ``mu[i]`` return sum_j weights[j] f[j] N(nodes[j] | mu[i], sigma)."""
    args = (
        np.ascontiguousarray(nodes, dtype=np.float64),
        np.ascontiguousarray(weights, dtype=np.float64),
        np.ascontiguousarray(f, dtype=np.float64),
        np.ascontiguousarray(mu, dtype=np.float64),
        float(sigma),
    )
    if USE_NUMBA:
        return _gauss_quadrature_numba(*args)
    return _gauss_quadrature_numpy(*args)


def set_threads(n):
    """Forward a thread-count hint to numba; a no-op on the numpy path."""
    if not USE_NUMBA or n is None:
        return
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
