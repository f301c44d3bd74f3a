"""Hot numeric kernels: CSR matvec and Jacobi-preconditioned CG.

Two interchangeable implementations are provided: numba ``@njit`` loops
(default) and a pure-numpy fallback. Selection happens at import time via
the ``PLATELAB_NUMBA`` environment variable: set it to ``0`` (or ``false``
or ``no``) to force the numpy path. ``benchmarks/bench_kernels.py``
compares the two.

Each path is deterministic: bitwise-identical inputs give
bitwise-identical outputs. Across paths, results agree only to rounding
(numpy reductions are pairwise/SIMD-blocked, the explicit loops are
strictly sequential), so pick one path per experiment when byte-stable
artifacts matter.
"""

import os

import numpy as np

USE_NUMBA = os.environ.get("PLATELAB_NUMBA", "1").strip().lower() not in (
    "0",
    "false",
    "no",
)

if USE_NUMBA:
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False


def csr_matvec_numpy(indptr, indices, data, x):
    # every row holds at least the diagonal, so indptr[:-1] is strictly
    # increasing and reduceat never sees an empty segment
    return np.add.reduceat(data * x[indices], indptr[:-1])


def pcg_numpy(indptr, indices, data, inv_diag, b, x0, rel_tol, max_iter):
    """Jacobi-preconditioned CG, vectorized-numpy flavor.

    Returns ``(x, iterations, relative_residual)``; the caller decides
    whether the residual is acceptable.
    """
    x = x0.copy()
    b_norm = float(np.sqrt(np.dot(b, b)))
    if b_norm == 0.0:
        return np.zeros_like(b), 0, 0.0
    r = b - csr_matvec_numpy(indptr, indices, data, x)
    z = inv_diag * r
    p = z.copy()
    rz = float(np.dot(r, z))
    r_norm = float(np.sqrt(np.dot(r, r)))
    it = 0
    while it < max_iter and r_norm > rel_tol * b_norm:
        ap = csr_matvec_numpy(indptr, indices, data, p)
        alpha = rz / float(np.dot(p, ap))
        x += alpha * p
        r -= alpha * ap
        z = inv_diag * r
        rz_new = float(np.dot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
        r_norm = float(np.sqrt(np.dot(r, r)))
        it += 1
    return x, it, r_norm / b_norm


if USE_NUMBA:

    @numba.njit(cache=True)
    def _csr_matvec_jit(indptr, indices, data, x, out):
        for i in range(out.shape[0]):
            s = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                s += data[k] * x[indices[k]]
            out[i] = s

    def csr_matvec_numba(indptr, indices, data, x):
        out = np.empty(x.shape[0])
        _csr_matvec_jit(indptr, indices, data, x, out)
        return out

    @numba.njit(cache=True)
    def pcg_numba(indptr, indices, data, inv_diag, b, x0, rel_tol, max_iter):
        n = b.shape[0]
        x = x0.copy()
        b_norm = 0.0
        for i in range(n):
            b_norm += b[i] * b[i]
        b_norm = np.sqrt(b_norm)
        if b_norm == 0.0:
            return np.zeros_like(b), 0, 0.0
        ap = np.empty(n)
        _csr_matvec_jit(indptr, indices, data, x, ap)
        r = np.empty(n)
        z = np.empty(n)
        rz = 0.0
        r_norm = 0.0
        for i in range(n):
            r[i] = b[i] - ap[i]
            z[i] = inv_diag[i] * r[i]
            rz += r[i] * z[i]
            r_norm += r[i] * r[i]
        r_norm = np.sqrt(r_norm)
        p = z.copy()
        it = 0
        while it < max_iter and r_norm > rel_tol * b_norm:
            _csr_matvec_jit(indptr, indices, data, p, ap)
            pap = 0.0
            for i in range(n):
                pap += p[i] * ap[i]
            alpha = rz / pap
            rz_new = 0.0
            r_norm = 0.0
            for i in range(n):
                x[i] += alpha * p[i]
                r[i] -= alpha * ap[i]
                z[i] = inv_diag[i] * r[i]
                rz_new += r[i] * z[i]
                r_norm += r[i] * r[i]
            beta = rz_new / rz
            for i in range(n):
                p[i] = z[i] + beta * p[i]
            rz = rz_new
            r_norm = np.sqrt(r_norm)
            it += 1
        return x, it, r_norm / b_norm

    csr_matvec = csr_matvec_numba
    pcg = pcg_numba
else:
    csr_matvec_numba = None
    pcg_numba = None
    csr_matvec = csr_matvec_numpy
    pcg = pcg_numpy
