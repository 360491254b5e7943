"""One-dimensional Legendre collocation machinery.

Everything here lives on the reference interval [-1, 1]: Legendre polynomial
evaluation, Gauss and Gauss-Lobatto node sets, differentiation matrices, and
barycentric evaluation/derivative matrices onto arbitrary target points.
All functions are pure; `Grid1D` instances are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid1D",
    "legendre_eval",
    "gauss_nodes",
    "gll_nodes",
    "diff_matrix",
    "diff2_matrix",
    "eval_matrix",
    "deriv_eval_matrix",
    "barycentric_weights",
    "build_grid",
]

_NEWTON_TOL = 1e-14
_NEWTON_MAXIT = 100


def legendre_eval(n, x):
    """Evaluate the Legendre polynomial P_n and its derivative P_n' at x.

    Uses the three-term recurrence, carrying the derivative alongside, so the
    result is well defined on the whole closed interval including x = +-1.
    Works on scalars and arrays alike.
    """
    if n < 0:
        raise ValueError("polynomial order must be >= 0")
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    dp_prev = np.zeros_like(x)
    if n == 0:
        return p_prev, dp_prev
    p = x.copy()
    dp = np.ones_like(x)
    for k in range(1, n):
        # (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1};  P'_{k+1} = P'_{k-1} + (2k+1) P_k
        p_next = ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
        dp_next = dp_prev + (2 * k + 1) * p
        p_prev, p = p, p_next
        dp_prev, dp = dp, dp_next
    return p, dp


def _legendre_second_derivative(n, x):
    """P_n'' from the Legendre differential equation; x strictly inside (-1, 1)."""
    p, dp = legendre_eval(n, x)
    return (2.0 * x * dp - n * (n + 1) * p) / (1.0 - x * x)


def _newton_refine(f, df, x0, lo, hi):
    """Vectorized Newton iteration with clamping into the enclosing bracket."""
    x = x0.copy()
    for _ in range(_NEWTON_MAXIT):
        fx = f(x)
        step = fx / df(x)
        x_new = np.clip(x - step, lo, hi)
        if np.all(np.abs(x_new - x) < 1e-15):
            x = x_new
            break
        x = x_new
    return x


def _bisect(f, lo, hi):
    """Plain bisection on a sign-changing bracket, vectorized over brackets."""
    flo = f(lo)
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        take_left = np.sign(fmid) == np.sign(flo)
        lo = np.where(take_left, mid, lo)
        flo = np.where(take_left, fmid, flo)
        hi = np.where(take_left, hi, mid)
    return 0.5 * (lo + hi)


def _symmetrize(nodes):
    """Enforce exact antisymmetry about 0 (node sets here are all symmetric)."""
    return 0.5 * (nodes - nodes[::-1])


def gauss_nodes(n):
    """The n zeros of P_n, sorted and antisymmetric about the origin.

    Newton from the standard Chebyshev-based initial guesses; any root that
    misses the value tolerance is re-bracketed by a sign scan and bisected.
    """
    if n < 1:
        raise ValueError("need n >= 1 for Gauss nodes")
    if n == 1:
        return np.zeros(1)
    k = np.arange(1, n + 1)
    x0 = -np.cos(np.pi * (k - 0.25) / (n + 0.5))
    f = lambda x: legendre_eval(n, x)[0]
    df = lambda x: legendre_eval(n, x)[1]
    x = _newton_refine(f, df, x0, -1.0, 1.0)
    bad = np.abs(f(x)) > _NEWTON_TOL * n * n
    if np.any(bad) or np.any(np.diff(x) <= 0):
        x = _scan_roots(f, n)
    return _symmetrize(np.sort(x))


def gll_nodes(n):
    """Gauss-Lobatto set for degree n: +-1 plus the n-1 zeros of P_n'."""
    if n < 2:
        raise ValueError("need degree >= 2 for Gauss-Lobatto nodes")
    k = np.arange(1, n)
    x0 = -np.cos(np.pi * k / n)  # Chebyshev extrema initial guesses
    f = lambda x: legendre_eval(n, x)[1]
    df = lambda x: _legendre_second_derivative(n, x)
    x = _newton_refine(f, df, x0, -1.0, 1.0)
    bad = np.abs(f(x)) > _NEWTON_TOL * n * n
    if np.any(bad) or np.any(np.diff(x) <= 0):
        x = _scan_roots(f, n - 1)
    interior = _symmetrize(np.sort(x))
    return np.concatenate(([-1.0], interior, [1.0]))


def _scan_roots(f, expected):
    """Bracket roots by a fine cosine-spaced sign scan, then bisect."""
    grid = -np.cos(np.linspace(0.0, np.pi, 8 * expected + 17))
    vals = f(grid)
    sign = np.sign(vals)
    idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    if len(idx) != expected:
        raise RuntimeError(
            f"root scan found {len(idx)} sign changes, expected {expected}"
        )
    return _bisect(f, grid[idx], grid[idx + 1])


def barycentric_weights(nodes):
    """Barycentric weights in product form with running rescaling.

    The factors are scaled by 4/(span) while accumulating, which keeps the
    products in range for very high degrees (used up to degree ~1000).
    """
    x = np.asarray(nodes, dtype=float)
    m = len(x)
    diff = x[:, None] - x[None, :]
    if np.any(np.abs(diff + np.eye(m)) < 1e-15 * max(1.0, np.ptp(x))):
        raise ValueError("duplicate nodes")
    scale = 4.0 / (x.max() - x.min())
    w = np.ones(m)
    for j in range(m):
        w *= np.where(np.arange(m) == j, 1.0, scale * (x - x[j]))
    w = 1.0 / w
    return w / np.abs(w).max()


def diff_matrix(nodes):
    """First-derivative collocation matrix on a Gauss-Lobatto node set.

    Off-diagonal entries are P_n(x_i) / ((x_i - x_j) P_n(x_j)); diagonal
    entries make every row sum to zero.  For ascending nodes (x_0 = -1) the
    corners come out as -n(n+1)/4 and +n(n+1)/4; they are pinned to those
    exact integer-derived values.
    """
    x = np.asarray(nodes, dtype=float)
    n = len(x) - 1
    if n < 1:
        raise ValueError("need at least two nodes")
    dx = x[:, None] - x[None, :]
    if np.any(np.abs(dx + np.eye(n + 1)) < 1e-15):
        raise ValueError("duplicate nodes")
    p, _ = legendre_eval(n, x)
    np.fill_diagonal(dx, 1.0)
    d = (p[:, None] / p[None, :]) / dx
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -d.sum(axis=1))
    corner = n * (n + 1) / 4.0
    d[0, 0] = -corner
    d[n, n] = corner
    return d


def _bary_diff_matrices(nodes, weights, max_order):
    """On-grid derivative matrices of order 1..max_order (negative-sum trick).

    The order-k matrix is built from the order-(k-1) one column by column:
        D_k[i, j] = k / (x_i - x_j) * ((w_j / w_i) D_{k-1}[i, i] - D_{k-1}[i, j])
    with diagonals fixed so that constants differentiate to zero.
    """
    x = np.asarray(nodes, dtype=float)
    m = len(x)
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    wr = weights[None, :] / weights[:, None]
    mats = []
    prev = np.eye(m)
    for order in range(1, max_order + 1):
        d = order * (wr * np.diag(prev)[:, None] - prev) / dx
        np.fill_diagonal(d, 0.0)
        np.fill_diagonal(d, -d.sum(axis=1))
        mats.append(d)
        prev = d
    return mats


def eval_matrix(rep_nodes, targets, weights=None):
    """Barycentric evaluation matrix M with M[i, j] = l_j(targets[i]).

    Targets that coincide with a representation node get an exact unit row,
    so `targets == rep_nodes` returns the identity.
    """
    x = np.asarray(rep_nodes, dtype=float)
    t = np.atleast_1d(np.asarray(targets, dtype=float))
    w = barycentric_weights(x) if weights is None else weights
    diff = t[:, None] - x[None, :]
    hit_rows, hit_cols = np.nonzero(np.abs(diff) < 1e-14)
    np.putmask(diff, np.abs(diff) < 1e-14, 1.0)
    m = (w[None, :] / diff)
    m /= m.sum(axis=1)[:, None]
    m[hit_rows, :] = 0.0
    m[hit_rows, hit_cols] = 1.0
    return m


def deriv_eval_matrix(rep_nodes, targets, order, weights=None):
    """Matrix of basis derivatives at targets: M[i, j] = l_j^(order)(targets[i]).

    l_j^(order) has degree <= n, so differentiating on the grid and then
    evaluating barycentrically is exact on the representation space.
    """
    if order not in (1, 2):
        raise ValueError("derivative order must be 1 or 2")
    x = np.asarray(rep_nodes, dtype=float)
    w = barycentric_weights(x) if weights is None else weights
    dk = _bary_diff_matrices(x, w, order)[order - 1]
    return eval_matrix(x, targets, weights=w) @ dk


@dataclass(frozen=True)
class Grid1D:
    """Representation grid of one dimension.

    degree     -- polynomial degree n (n+1 representation nodes)
    rep_nodes  -- Gauss-Lobatto points, sorted, endpoints +-1
    d1, d2     -- first/second derivative collocation matrices on the nodes
    bary_w     -- barycentric weights of the nodes (cached for evaluations)
    """

    degree: int
    rep_nodes: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    bary_w: np.ndarray

    @property
    def n_nodes(self):
        return self.degree + 1


def build_grid(degree):
    """Assemble the `Grid1D` for a given polynomial degree (>= 2)."""
    nodes = gll_nodes(degree)
    w = barycentric_weights(nodes)
    d1 = diff_matrix(nodes)
    d2 = _bary_diff_matrices(nodes, w, 2)[1]
    return Grid1D(degree=degree, rep_nodes=nodes, d1=d1, d2=d2, bary_w=w)


def diff2_matrix(grid):
    """Second-derivative matrix of a grid (direct barycentric construction)."""
    return grid.d2
