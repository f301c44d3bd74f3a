"""Alternating minimization for the composite hinged-plate problem.

The double infimum over (density, deflection) is attacked by alternation:
eigensolve at fixed density, bathtub-rearrange at fixed deflection,
repeat. Each half step minimizes the quotient in one variable, so the
quotient history is non-increasing; the loop stops when the density
reproduces itself node-for-node or the quotient stalls.

Alternation converges to a fixed point, not provably to the global
minimum; ``restarts`` reruns the loop from randomized admissible
densities and keeps the best quotient found.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import plate
from .eigensolver import principal_pair, rayleigh_quotient
from .fields import ScalarField
from .geometry import build_grid, DomainSpec, Grid
from .poisson import assemble_laplacian
from .rearrange import DensityField, mass, optimal_density, uniform_density


@dataclass(frozen=True)
class OptimizeOptions:
    theta_tol: float = 1e-8
    max_outer: int = 200
    eig_tol: float = 1e-11
    eig_max_iter: int = 10000
    solve_rel_tol: float = 1e-10
    restarts: int = 1
    seed: int | None = None


@dataclass(frozen=True)
class OptimalPair:
    """Converged (u, v, rho, theta, t) on one grid."""

    u: ScalarField
    v: ScalarField
    rho: DensityField
    theta: float
    t: float
    grid: Grid
    spec: DomainSpec


@dataclass(frozen=True)
class SolveReport:
    theta_history: tuple
    inner_iterations: tuple
    eig_increments: tuple
    mass_errors: tuple
    termination: str
    outer_iterations: int
    wall_time: float
    restart_thetas: tuple
    formulation: str = plate.FORMULATION


class OptimizeError(RuntimeError):
    pass


def optimize(spec, nodes_per_side, h, H, M, opts=OptimizeOptions(), grid=None, op=None):
    """Run the alternating scheme; returns the best (pair, report) found.

    The first start is the uniform admissible density; additional
    ``opts.restarts - 1`` starts are randomized threshold densities drawn
    from ``opts.seed``. All starts share one grid and operator (and its
    factorization cache).
    """
    if grid is None:
        grid = build_grid(spec, nodes_per_side)
    if op is None:
        op = assemble_laplacian(grid)

    starts = [uniform_density(grid, h, H, M)]
    n_restarts = max(int(opts.restarts), 1)
    if n_restarts > 1:
        rng = np.random.default_rng(opts.seed)
        for _ in range(n_restarts - 1):
            probe = rng.uniform(0.5, 1.5, grid.n)
            starts.append(optimal_density(probe, h, H, M, grid=grid).rho)

    best = None
    thetas = []
    for rho0 in starts:
        pair, report = _alternate(spec, grid, op, rho0, h, H, M, opts)
        thetas.append(pair.theta)
        if best is None or pair.theta < best[0].theta:
            best = (pair, report)
    pair, report = best
    report = SolveReport(
        theta_history=report.theta_history,
        inner_iterations=report.inner_iterations,
        eig_increments=report.eig_increments,
        mass_errors=report.mass_errors,
        termination=report.termination,
        outer_iterations=report.outer_iterations,
        wall_time=report.wall_time,
        restart_thetas=tuple(thetas),
    )
    return pair, report


def _alternate(spec, grid, op, rho0, h, H, M, opts):
    t0 = time.perf_counter()
    rho = rho0
    theta_history = []
    inner_iterations = []
    eig_increments = []
    mass_errors = []
    termination = "max-outer"
    u_warm = None
    eig = None
    thr = None
    for _ in range(opts.max_outer):
        eig = principal_pair(
            op,
            rho,
            tol=opts.eig_tol,
            max_iter=opts.eig_max_iter,
            u0=u_warm,
            rel_tol=opts.solve_rel_tol,
        )
        theta_history.append(eig.theta)
        inner_iterations.append(eig.iterations)
        eig_increments.append(eig.final_increment)
        mass_errors.append(abs(mass(rho) - M))
        u_warm = eig.u

        thr = optimal_density(eig.u, h, H, M, grid=grid)
        if np.array_equal(thr.rho.values, rho.values):
            termination = "rho-fixed"
            rho = thr.rho
            break
        rho = thr.rho
        if len(theta_history) >= 2 and abs(
            theta_history[-1] - theta_history[-2]
        ) <= opts.theta_tol * abs(theta_history[-1]):
            termination = "theta-converged"
            break

    if eig is None or thr is None:
        raise OptimizeError("no outer iterations performed")

    theta = rayleigh_quotient(eig.u, eig.v, rho)
    pair = OptimalPair(
        u=eig.u, v=eig.v, rho=rho, theta=theta, t=thr.t, grid=grid, spec=spec
    )
    report = SolveReport(
        theta_history=tuple(theta_history),
        inner_iterations=tuple(inner_iterations),
        eig_increments=tuple(eig_increments),
        mass_errors=tuple(mass_errors),
        termination=termination,
        outer_iterations=len(theta_history),
        wall_time=time.perf_counter() - t0,
        restart_thetas=(),
    )
    return pair, report
