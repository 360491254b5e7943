"""Upwinded collocation nodes and the stabilized 1-D operator rows.

The collocation points of one dimension are the n-1 roots of
eps * P_n' - beta * P_n inside (-1, 1).  For beta = 0 they coincide with the
interior Gauss-Lobatto points (best for diffusion); as eps/|beta| -> 0 they
migrate to the zeros of P_n (best for convection).  Enforcing the equation at
these points instead of the interior representation points is what removes
the spurious oscillations of convection-dominated collocation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral1d import (
    Grid1D,
    build_grid,
    deriv_eval_matrix,
    eval_matrix,
    gauss_nodes,
    gll_nodes,
    legendre_eval,
)

__all__ = [
    "ScGrid1D",
    "superconsistent_nodes",
    "sc_grid",
    "plain_grid",
    "assemble_sc_1d_operator",
    "rhs_collocator",
]


def superconsistent_nodes(n, epsilon, beta):
    """Roots of eps * P_n' - beta * P_n in (-1, 1), sorted.

    beta = 0 returns the interior Gauss-Lobatto points.  beta < 0 returns the
    mirror image of the beta > 0 set, which preserves the upwind direction.
    """
    if n < 2:
        raise ValueError("need degree >= 2")
    if epsilon <= 0:
        raise ValueError("diffusion coefficient must be strictly positive")
    if beta == 0:
        return gll_nodes(n)[1:-1].copy()
    if beta < 0:
        return -superconsistent_nodes(n, epsilon, -beta)[::-1]

    # Normalize the two coefficients so the target function is O(1).
    s = max(epsilon, abs(beta))
    e, b = epsilon / s, beta / s

    def fun(x):
        p, dp = legendre_eval(n, x)
        return e * dp - b * p

    # For beta > 0 root j sits between the j-th Gauss zero and the j-th
    # interior Lobatto zero; assert the sign change before bisecting.
    gauss = gauss_nodes(n)
    lob = gll_nodes(n)[1:-1]
    lo, hi = gauss[:-1], lob
    flo, fhi = fun(lo), fun(hi)
    if np.any(np.sign(flo) * np.sign(fhi) > 0):
        raise RuntimeError(
            "bracket sign check failed for the collocation node equation"
        )
    z = _bisect_newton(fun, n, e, b, lo, hi)
    return z


def _bisect_newton(fun, n, e, b, lo, hi):
    """Bisection to a narrow bracket, then a few Newton polish steps."""
    flo = fun(lo)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        fmid = fun(mid)
        left = np.sign(fmid) == np.sign(flo)
        lo = np.where(left, mid, lo)
        flo = np.where(left, fmid, flo)
        hi = np.where(left, hi, mid)
    z = 0.5 * (lo + hi)
    for _ in range(4):
        p, dp = legendre_eval(n, z)
        # d/dx of e*P' - b*P, with P'' from the Legendre ODE
        ddp = (2.0 * z * dp - n * (n + 1) * p) / (1.0 - z * z)
        step = (e * dp - b * p) / (e * ddp - b * dp)
        z = np.clip(z - step, lo, hi)
    return z


@dataclass(frozen=True)
class ScGrid1D:
    """One dimension's representation grid plus its collocation machinery.

    coll_nodes are the n-1 interior collocation points z; c0/c1/c2 evaluate
    the Lagrange basis and its first two derivatives at z.  `row_nodes` is
    the full (n+1)-point row grid [-1, z_1, ..., z_{n-1}, +1] and a0/a1/a2
    are the corresponding (n+1) x (n+1) evaluation blocks (boundary rows of
    a0 are exact unit rows).
    """

    base: Grid1D
    epsilon: float
    beta: float
    coll_nodes: np.ndarray
    c0: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    a0: np.ndarray
    a1: np.ndarray
    a2: np.ndarray

    @property
    def degree(self):
        return self.base.degree

    @property
    def row_nodes(self):
        return np.concatenate(([-1.0], self.coll_nodes, [1.0]))


def _make_grid(base, epsilon, beta, coll):
    x, w = base.rep_nodes, base.bary_w
    rows = np.concatenate(([-1.0], coll, [1.0]))
    a0 = eval_matrix(x, rows, weights=w)
    a1 = deriv_eval_matrix(x, rows, 1, weights=w)
    a2 = deriv_eval_matrix(x, rows, 2, weights=w)
    return ScGrid1D(
        base=base,
        epsilon=float(epsilon),
        beta=float(beta),
        coll_nodes=coll,
        c0=a0[1:-1],
        c1=a1[1:-1],
        c2=a2[1:-1],
        a0=a0,
        a1=a1,
        a2=a2,
    )


def sc_grid(n, epsilon, beta):
    """Build the superconsistent grid for degree n and placement (eps, beta)."""
    base = build_grid(n)
    coll = superconsistent_nodes(n, epsilon, beta)
    return _make_grid(base, epsilon, beta, coll)


def plain_grid(n):
    """Plain spectral collocation: collocation points = interior rep points."""
    base = build_grid(n)
    return _make_grid(base, 1.0, 0.0, base.rep_nodes[1:-1].copy())


def assemble_sc_1d_operator(g, rho=0.0):
    """Collocated matrix of beta*d/dx - eps*d2/dx2 + rho with Dirichlet rows.

    Rows 1..n-1 enforce the equation at the collocation points; rows 0 and n
    are identity rows for the boundary values.
    """
    n = g.degree
    a = np.zeros((n + 1, n + 1))
    a[1:-1] = g.beta * g.c1 - g.epsilon * g.c2 + rho * g.c0
    a[0, 0] = 1.0
    a[n, n] = 1.0
    return a


def rhs_collocator(g, b, bc=(0.0, 0.0)):
    """Right-hand side vector: b at the collocation points, bc at the ends."""
    n = g.degree
    r = np.empty(n + 1)
    r[1:-1] = b(g.coll_nodes) if callable(b) else float(b)
    r[0], r[n] = bc
    return r
