"""Hinged-plate (Navier) biharmonic solves as two chained Poisson solves.

``lap^2 u = f`` with ``u = lap u = 0`` on the boundary splits into
``-lap v = f`` and ``-lap u = v``, both with zero Dirichlet data. On the
smooth and convex domains built into this package the split problem and
the fourth-order weak problem have the same solution; the discretization
commits to the split form everywhere, and reports record that choice.
"""

from __future__ import annotations

from .poisson import DEFAULT_REL_TOL, solve_dirichlet

FORMULATION = "second-order-system"


def solve_navier(op, f, rel_tol=DEFAULT_REL_TOL, x0_v=None, x0_u=None):
    """Return ``(u, v)`` with ``v`` the discrete ``-lap u`` and ``lap^2 u = f``.

    ``x0_v``/``x0_u`` warm-start the two inner solves (value arrays, not
    fields); results are independent of the starts up to the solver
    residual contract.
    """
    v = solve_dirichlet(op, f, rel_tol=rel_tol, x0=x0_v)
    u = solve_dirichlet(op, v, rel_tol=rel_tol, x0=x0_u)
    return u, v
