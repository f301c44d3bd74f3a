"""Compare the numba kernels against the pure-numpy fallback.

Run with ``python benchmarks/bench_kernels.py``. Both implementations are
imported directly, so the ``PLATELAB_NUMBA`` switch does not matter here
(it only selects which one the package uses).
"""

import time

import numpy as np

import platelab as pl
from platelab import _kernels


def _time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    if not _kernels.USE_NUMBA:
        print("numba unavailable or disabled; only the numpy path can run")
        return

    rng = np.random.default_rng(42)
    for nps, label in ((129, "square 127x127"), (257, "square 255x255")):
        grid = pl.build_grid(pl.unit_square(), nps)
        op = pl.assemble_laplacian(grid)
        b = rng.standard_normal(op.n)
        x0 = np.zeros(op.n)

        # warm up the JIT before timing
        _kernels.csr_matvec_numba(op.indptr, op.indices, op.data, b)
        _kernels.pcg_numba(op.indptr, op.indices, op.data, op._inv_diag, b, x0, 1e-10, 10)

        t_mv_nb = _time(
            lambda: _kernels.csr_matvec_numba(op.indptr, op.indices, op.data, b), 20
        )
        t_mv_np = _time(
            lambda: _kernels.csr_matvec_numpy(op.indptr, op.indices, op.data, b), 20
        )

        def run_nb():
            return _kernels.pcg_numba(
                op.indptr, op.indices, op.data, op._inv_diag, b, x0, 1e-10, 10**5
            )

        def run_np():
            return _kernels.pcg_numpy(
                op.indptr, op.indices, op.data, op._inv_diag, b, x0, 1e-10, 10**5
            )

        x_nb, it_nb, _ = run_nb()
        x_np, it_np, _ = run_np()
        t_cg_nb = _time(run_nb, 3)
        t_cg_np = _time(run_np, 3)
        agree = np.max(np.abs(x_nb - x_np)) / np.max(np.abs(x_nb))

        print(label, "(%d unknowns)" % op.n)
        print(
            "  matvec   numba %8.3f us   numpy %8.3f us   speedup %.1fx"
            % (t_mv_nb * 1e6, t_mv_np * 1e6, t_mv_np / t_mv_nb)
        )
        print(
            "  pcg      numba %8.1f ms   numpy %8.1f ms   speedup %.1fx"
            "   (%d vs %d iterations, solutions agree to %.1e)"
            % (t_cg_nb * 1e3, t_cg_np * 1e3, t_cg_np / t_cg_nb, it_nb, it_np, agree)
        )


if __name__ == "__main__":
    main()
