"""Rank-adaptive alternating solver for train linear systems A x = b.

One-site alternating sweeps over the cores.  For each core two candidate
updates exist: the Galerkin-projected square solve (cheap, machine-precision
on benign systems) and the local least-squares solve through A^T A interfaces
(monotone on strongly non-symmetric, ill-conditioned systems).  Because the
true residual is an explicit quadratic in a single core, both candidates are
scored exactly and an update is only ever accepted when it does not increase
the residual; convection-dominated systems therefore plateau instead of
diverging.  Basis enrichment appends the leading directions of the projected
residual gradient (rounded to the enrichment rank) at every move, growing
ranks until max_rank.  Normal equations are never formed globally.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .errors import ShapeError
from .tensor_train import (
    TTVector,
    compression_ratio,
    tt_add,
    tt_apply,
    tt_norm,
    tt_rank_one,
    tt_round,
    tt_scale,
)

__all__ = ["SolverConfig", "SolveReport", "solve", "residual"]


@dataclass
class SolverConfig:
    max_sweeps: int = 40
    residual_tol: float = 1e-8
    rounding_tol: float = 1e-10
    enrichment_rank: int = 2
    max_rank: int = 64
    local_solver: str = "auto"  # auto | direct | iterative
    local_direct_size: int = 2000
    inner_tol_factor: float = 0.02
    seed: int = 0
    stagnation_window: int = 5
    stagnation_drop: float = 0.01

    def __post_init__(self):
        if self.residual_tol <= 0 or self.rounding_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_rank < 1:
            raise ValueError("max_rank must be at least 1")
        if self.local_solver not in ("auto", "direct", "iterative"):
            raise ValueError("local_solver must be auto, direct or iterative")


@dataclass
class SolveReport:
    residual_history: list = field(default_factory=list)
    rank_history: list = field(default_factory=list)
    compression_history: list = field(default_factory=list)
    wall_time: float = 0.0
    converged: bool = False
    stagnated: bool = False

    def to_dict(self):
        return {
            "residuals": list(map(float, self.residual_history)),
            "ranks": list(map(int, self.rank_history)),
            "compression": list(map(float, self.compression_history)),
            "wall_time_s": float(self.wall_time),
            "converged": bool(self.converged),
        }


def residual(a, x, rhs, tol=1e-8):
    """Relative Frobenius residual ||A x - rhs|| / ||rhs||.

    The difference is rounded at 0.01 * tol before taking the norm.
    """
    bnorm = tt_norm(rhs)
    if bnorm == 0.0:
        raise ValueError("rhs must be nonzero")
    diff = tt_round(tt_add(tt_apply(a, x), tt_scale(rhs, -1.0)), 0.01 * tol)
    return tt_norm(diff) / bnorm


# -- interface updates --------------------------------------------------------
# Shapes: phi_a (x, a, z): test bond, operator bond, trial bond.
#         phi_n (x, a1, a2, z): A^T A interfaces, two operator bonds.
#         phi_g (x, a, b): A^T b interfaces.  phi_b (x, b): plain rhs.


def _left_a(phi, xc, ac):
    t = np.tensordot(phi, xc, axes=([0], [0]))        # (a, z, m, X)
    t = np.tensordot(t, ac, axes=([0, 2], [0, 1]))    # (z, X, n, A)
    return np.tensordot(t, xc, axes=([0, 2], [0, 1]))  # (X, A, Z)


def _right_a(phi, xc, ac):
    t = np.tensordot(xc, phi, axes=([2], [0]))        # (x, m, A, Z)
    t = np.tensordot(ac, t, axes=([1, 3], [1, 2]))    # (a, n, x, Z)
    return np.tensordot(t, xc, axes=([1, 3], [1, 2])).transpose(1, 0, 2)


def _left_n(phi, xc, ac):
    # (x,a1,a2,z) -> next; the two operator copies share their row index k
    t = np.tensordot(phi, xc, axes=([0], [0]))          # (a1,a2,z,n1,X)
    t = np.tensordot(t, ac, axes=([0, 3], [0, 2]))      # (a2,z,X,k,A1)
    t = np.tensordot(t, ac, axes=([0, 3], [0, 1]))      # (z,X,A1,n2,A2)
    return np.tensordot(t, xc, axes=([0, 3], [0, 1]))


def _right_n(phi, xc, ac):
    # phi (X, A1, A2, Z) -> (x, a1, a2, z)
    t = np.tensordot(xc, phi, axes=([2], [0]))          # (x, n1, A1, A2, Z)
    t = np.tensordot(ac, t, axes=([2, 3], [1, 2]))      # (a1, k, x, A2, Z)
    t = np.tensordot(ac, t, axes=([1, 3], [1, 3]))      # (a2, n2, a1, x, Z)
    t = np.tensordot(t, xc, axes=([1, 4], [1, 2]))      # (a2, a1, x, z)
    return t.transpose(2, 1, 0, 3)


def _left_g(phi, xc, ac, bc):
    # (x, a, b): x-core column side, operator, rhs on the row side
    t = np.tensordot(phi, xc, axes=([0], [0]))          # (a, b, n, X)
    t = np.tensordot(t, ac, axes=([0, 2], [0, 2]))      # (b, X, k, A)
    return np.tensordot(t, bc, axes=([0, 2], [0, 1]))   # (X, A, B)


def _right_g(phi, xc, ac, bc):
    # phi (X, A, B) -> (x, a, b)
    t = np.tensordot(xc, phi, axes=([2], [0]))          # (x, n, A, B)
    t = np.tensordot(ac, t, axes=([2, 3], [1, 2]))      # (a, k, x, B)
    t = np.tensordot(t, bc, axes=([1, 3], [1, 2]))      # (a, x, b)
    return t.transpose(1, 0, 2)


def _left_b(phi, xc, bc):
    t = np.tensordot(phi, xc, axes=([0], [0]))          # (b, m, X)
    return np.tensordot(t, bc, axes=([0, 1], [0, 1]))   # (X, B)


def _right_b(phi, xc, bc):
    t = np.tensordot(xc, phi, axes=([2], [0]))          # (x, m, B)
    return np.tensordot(t, bc, axes=([1, 2], [1, 2]))   # (x, b)


# -- local operators -----------------------------------------------------------


def _gal_rhs(phi_bl, bc, phi_br):
    t = np.tensordot(phi_bl, bc, axes=([1], [0]))       # (x, m, B)
    return np.tensordot(t, phi_br, axes=([2], [1]))     # (x, m, y)


def _gal_matvec(phi_l, ac, phi_r, u3):
    t = np.tensordot(phi_l, u3, axes=([2], [0]))        # (x, a, n, y')
    t = np.tensordot(t, ac, axes=([1, 2], [0, 2]))      # (x, y', m, a')
    return np.tensordot(t, phi_r, axes=([1, 3], [2, 1]))  # (x, m, y)


class _LsApply:
    """Matmul-form (A^T A)-projected matvec with operator pieces pre-reshaped.

    Hoisting the reshapes of the operator core out of the CG loop roughly
    halves the per-iteration cost at desk-scale sizes.
    """

    def __init__(self, phi_nl, ac, phi_nr):
        rx, ra1, ra2, rz = phi_nl.shape
        self.rx, self.rz = rx, rz
        ry, rb1, rb2, rw = phi_nr.shape
        self.ry, self.rw = ry, rw
        ra, k, n, rap = ac.shape
        self.n = n
        self.k = k
        self.phil = np.ascontiguousarray(phi_nl.reshape(rx * ra1 * ra2, rz))
        self.ra1, self.ra2 = ra1, ra2
        # ac as (a2*n, k*A2) for the column-side copy
        self.ac_col = np.ascontiguousarray(
            ac.transpose(0, 2, 1, 3).reshape(ra * n, k * rap)
        )
        # ac as (a1*k, m*A1) for the row-side copy
        self.ac_row = np.ascontiguousarray(ac.reshape(ra * k, n * rap))
        self.rap = rap
        # phi_nr as (A1*A2*Y, y)
        self.phir = np.ascontiguousarray(
            phi_nr.transpose(1, 2, 3, 0).reshape(rb1 * rb2 * rw, ry)
        )

    def __call__(self, u3):
        rx, ra1, ra2 = self.rx, self.ra1, self.ra2
        n, k, rap = self.n, self.k, self.rap
        rz, rw, ry = self.rz, self.rw, self.ry
        u = u3.reshape(rz, n * rw)
        t = self.phil @ u                                   # (x*a1*a2, n*W)
        t = t.reshape(rx, ra1, ra2, n, rw)
        t = t.transpose(0, 1, 4, 2, 3).reshape(rx * ra1 * rw, ra2 * n)
        t = t @ self.ac_col                                 # (x*a1*W, k*A2)
        t = t.reshape(rx, ra1, rw, k, rap)
        t = t.transpose(0, 2, 4, 1, 3).reshape(rx * rw * rap, ra1 * k)
        t = t @ self.ac_row                                 # (x*W*A2, m*A1)
        t = t.reshape(rx, rw, rap, n, rap)                  # (x, W, A2, m, A1)
        t = t.transpose(0, 3, 4, 2, 1).reshape(rx * n, rap * rap * rw)
        t = t @ self.phir                                   # (x*m, y)
        return t.reshape(rx, n, ry)


def _gal_dense(phi_l, ac, phi_r):
    b = np.einsum("xaX,amnb,ybY->xmyXnY", phi_l, ac, phi_r, optimize=True)
    m = phi_l.shape[0] * ac.shape[1] * phi_r.shape[0]
    return b.reshape(m, m)


def _ls_rhs(phi_gl, ac, bc, phi_gr):
    # (A^T b) projected: (x, m, y)
    t = np.tensordot(phi_gl, bc, axes=([2], [0]))       # (x, a, k, B)
    t = np.tensordot(t, ac, axes=([1, 2], [0, 1]))      # (x, B, m, A)
    return np.tensordot(t, phi_gr, axes=([1, 3], [2, 1]))  # (x, m, y)


def _ls_matvec(phi_nl, ac, phi_nr, u3):
    # (A^T A) projected applied to a core
    t = np.tensordot(phi_nl, u3, axes=([3], [0]))       # (x, a1, a2, n, Y)
    t = np.tensordot(t, ac, axes=([2, 3], [0, 2]))      # (x, a1, Y, k, A2)
    t = np.tensordot(t, ac, axes=([1, 3], [0, 1]))      # (x, Y, A2, m, A1)
    return np.tensordot(t, phi_nr, axes=([1, 4, 2], [3, 1, 2]))  # (x, m, y)


def _ls_diag(phi_nl, ac, phi_nr):
    g = np.einsum("akmP,bkmQ->abmPQ", ac, ac, optimize=True)
    return np.einsum("xabx,abmPQ,yPQy->xmy", phi_nl, g, phi_nr, optimize=True).ravel()


def _ls_dense(phi_nl, ac, phi_nr):
    g = np.einsum("akmP,bknQ->abmnPQ", ac, ac, optimize=True)
    n = np.einsum("xabz,abmnPQ,yPQw->xmyznw", phi_nl, g, phi_nr, optimize=True)
    m = phi_nl.shape[0] * ac.shape[1] * phi_nr.shape[0]
    return n.reshape(m, m)


# -- truncation / enrichment ---------------------------------------------------


def _svd_keep(s, delta):
    if len(s) == 0:
        return 1
    tail = np.sqrt(np.cumsum(s[::-1] ** 2))[::-1]
    r = len(s)
    for i in range(len(s)):
        if tail[i] <= delta:
            r = i
            break
    return max(1, r)


def _split_left(u3, z3, rounding_tol, enrich_rank, max_rank, d):
    """Left-unfolding truncation of a solved core plus steering columns."""
    r0, n, _ = u3.shape
    mat = u3.reshape(r0 * n, -1)
    uu, ss, vv = np.linalg.svd(mat, full_matrices=False)
    delta = rounding_tol * np.linalg.norm(ss) / np.sqrt(max(d - 1, 1))
    keep = min(_svd_keep(ss, delta), max_rank)
    us = uu[:, :keep]
    carry = ss[:keep, None] * vv[:keep]
    k = 0
    if enrich_rank > 0 and keep < max_rank and z3 is not None:
        z = z3.reshape(r0 * n, -1)
        z = z - us @ (us.T @ z)
        zu, zs, _ = np.linalg.svd(z, full_matrices=False)
        nz = int((zs > 1e-14 * max(zs[0] if len(zs) else 0.0, 1e-300)).sum())
        k = min(enrich_rank, max_rank - keep, nz)
        if k > 0:
            us = np.hstack([us, zu[:, :k]])
    return us.reshape(r0, n, keep + k), carry, k


def _split_right(u3, z3, rounding_tol, enrich_rank, max_rank, d):
    r0, n, r1 = u3.shape
    mat = u3.reshape(r0, n * r1)
    uu, ss, vv = np.linalg.svd(mat, full_matrices=False)
    delta = rounding_tol * np.linalg.norm(ss) / np.sqrt(max(d - 1, 1))
    keep = min(_svd_keep(ss, delta), max_rank)
    vs = vv[:keep]
    carry = uu[:, :keep] * ss[None, :keep]
    k = 0
    if enrich_rank > 0 and keep < max_rank and z3 is not None:
        z = z3.reshape(-1, n * r1)
        z = z - (z @ vs.T) @ vs
        _, zs, zv = np.linalg.svd(z, full_matrices=False)
        nz = int((zs > 1e-14 * max(zs[0] if len(zs) else 0.0, 1e-300)).sum())
        k = min(enrich_rank, max_rank - keep, nz)
        if k > 0:
            vs = np.vstack([vs, zv[:k]])
    return vs.reshape(keep + k, n, r1), carry, k


# -- residual measurement --------------------------------------------------------


def _measure_residual(a, x, rhs, bnorm):
    """Stable relative residual: Gram form, refined exactly when small."""
    bnorm_sq = bnorm * bnorm
    phi = np.ones((1, 1, 1, 1))
    for xc, ac in zip(x.cores, a.cores):
        t = np.tensordot(phi, xc, axes=([0], [0]))
        t = np.tensordot(t, ac, axes=([0, 3], [0, 2]))
        t = np.tensordot(t, ac, axes=([0, 3], [0, 1]))
        phi = np.tensordot(t, xc, axes=([0, 3], [0, 1]))
    axax = float(phi.ravel()[0])
    phi2 = np.ones((1, 1, 1))
    for xc, ac, bc in zip(x.cores, a.cores, rhs.cores):
        t = np.tensordot(phi2, xc, axes=([0], [0]))
        t = np.tensordot(t, ac, axes=([0, 2], [0, 2]))
        phi2 = np.tensordot(t, bc, axes=([0, 2], [0, 1]))
    axb = float(phi2.ravel()[0])
    est_sq = axax - 2.0 * axb + bnorm_sq
    est = np.sqrt(max(est_sq, 0.0)) / bnorm
    if est_sq <= 0 or est < 1e-6:
        diff = tt_add(tt_apply(a, x), tt_scale(rhs, -1.0))
        return tt_norm(diff) / bnorm
    return est


# -- local solve with acceptance guard -------------------------------------------


def _quadratic(u3, n_mv, c_ls):
    """u^T N u - 2 c^T u: the true global ||Ax-b||^2 up to a constant."""
    return float(np.vdot(u3, n_mv(u3)) - 2.0 * np.vdot(c_ls, u3))


def _solve_core(l, ctx, cfg, current_res):
    """Guarded update of core l; returns (core, gradient direction)."""
    ac = ctx["a"].cores[l]
    phi_al, phi_ar = ctx["phi_al"][l], ctx["phi_ar"][l + 1]
    phi_nl, phi_nr = ctx["phi_nl"][l], ctx["phi_nr"][l + 1]
    phi_gl, phi_gr = ctx["phi_gl"][l], ctx["phi_gr"][l + 1]
    phi_bl, phi_br = ctx["phi_bl"][l], ctx["phi_br"][l + 1]
    bc = ctx["rhs"].cores[l]
    u_old = ctx["cores"][l]
    shape = u_old.shape
    size = u_old.size

    c_gal = _gal_rhs(phi_bl, bc, phi_br)
    c_ls = _ls_rhs(phi_gl, ac, bc, phi_gr)
    n_mv = _LsApply(phi_nl, ac, phi_nr)

    q_old = _quadratic(u_old, n_mv, c_ls)
    direct = cfg.local_solver == "direct" or (
        cfg.local_solver == "auto" and size <= cfg.local_direct_size
    )
    try_galerkin = ctx["gal_rejects"] < ctx["gal_reject_cap"]

    # candidate 1: Galerkin square system
    u_gal = None
    if not try_galerkin:
        pass
    elif direct:
        b_loc = _gal_dense(phi_al, ac, phi_ar)
        try:
            u_gal = np.linalg.solve(b_loc, c_gal.ravel()).reshape(shape)
        except np.linalg.LinAlgError:
            u_gal = np.linalg.lstsq(b_loc, c_gal.ravel(), rcond=None)[0].reshape(shape)
    else:
        op = spla.LinearOperator(
            (size, size),
            matvec=lambda u: _gal_matvec(phi_al, ac, phi_ar, u.reshape(shape)).ravel(),
        )
        rtol = max(cfg.inner_tol_factor * current_res, 1e-12)
        u_vec, _ = spla.gmres(
            op, c_gal.ravel(), x0=u_old.ravel(), rtol=rtol, atol=0.0,
            restart=40, maxiter=10,
        )
        u_gal = u_vec.reshape(shape)
    if u_gal is not None and not np.all(np.isfinite(u_gal)):
        u_gal = None

    best_u, best_q = u_old, q_old
    if u_gal is not None:
        q_gal = _quadratic(u_gal, n_mv, c_ls)
        if q_gal <= best_q:
            best_u, best_q = u_gal, q_gal
            ctx["gal_rejects"] = 0
        elif try_galerkin:
            ctx["gal_rejects"] += 1

    if best_u is u_old:
        # candidate 2: local least squares (SPD normal system, monotone)
        if direct:
            n_loc = _ls_dense(phi_nl, ac, phi_nr)
            try:
                u_ls = np.linalg.solve(n_loc, c_ls.ravel()).reshape(shape)
            except np.linalg.LinAlgError:
                u_ls = np.linalg.lstsq(n_loc, c_ls.ravel(), rcond=None)[0].reshape(shape)
        else:
            op = spla.LinearOperator(
                (size, size), matvec=lambda u: n_mv(u.reshape(shape)).ravel()
            )
            diag = _ls_diag(phi_nl, ac, phi_nr)
            diag = np.where(np.abs(diag) > 1e-300, diag, 1.0)
            prec = spla.LinearOperator((size, size), matvec=lambda u: u / diag)
            rtol = max(cfg.inner_tol_factor * current_res, 1e-12)
            u_vec, _ = spla.cg(
                op, c_ls.ravel(), x0=u_old.ravel(), rtol=rtol, atol=0.0,
                maxiter=250, M=prec,
            )
            u_ls = u_vec.reshape(shape)
        if np.all(np.isfinite(u_ls)):
            q_ls = _quadratic(u_ls, n_mv, c_ls)
            if q_ls <= best_q:
                best_u, best_q = u_ls, q_ls

    grad = n_mv(best_u) - c_ls  # projected residual gradient, steers enrichment
    return best_u, grad


# -- main driver -------------------------------------------------------------------


def _default_initial_guess(rhs, cfg, rng):
    """Low-rank start: the rhs compressed to rank 1, or random if that is 0."""
    x0 = tt_round(rhs, 0.5, max_rank=1)
    if tt_norm(x0) < 1e-13 * max(tt_norm(rhs), 1.0):
        factors = [rng.standard_normal(n) for n in rhs.mode_sizes]
        x0 = tt_rank_one(factors)
        x0 = tt_scale(x0, tt_norm(rhs) / max(tt_norm(x0), 1e-300))
    return x0


def _right_orth(cores):
    cores = [c.copy() for c in cores]
    for l in range(len(cores) - 1, 0, -1):
        r0, n, r1 = cores[l].shape
        q, r = np.linalg.qr(cores[l].reshape(r0, n * r1).T)
        cores[l] = q.T.reshape(-1, n, r1)
        cores[l - 1] = np.tensordot(cores[l - 1], r.T, axes=([2], [0]))
    return cores


def solve(a, rhs, x0=None, cfg=None):
    """Solve A x = rhs in train format; returns (best iterate, SolveReport)."""
    cfg = cfg or SolverConfig()
    if a.col_sizes != rhs.mode_sizes or a.row_sizes != rhs.mode_sizes:
        raise ShapeError("operator and right-hand side shapes do not match")
    bnorm = tt_norm(rhs)
    if bnorm == 0.0:
        raise ValueError("rhs must be nonzero")
    rng = np.random.default_rng(cfg.seed)
    t0 = time.perf_counter()

    x = x0 if x0 is not None else _default_initial_guess(rhs, cfg, rng)
    if x.mode_sizes != rhs.mode_sizes:
        raise ShapeError("initial guess has wrong mode sizes")
    x = tt_round(x, cfg.rounding_tol, max_rank=cfg.max_rank)
    d = x.ndim
    cores = [c.copy() for c in x.cores]

    report = SolveReport()
    best = {"res": np.inf, "cores": [c.copy() for c in cores]}
    current_res = 1.0
    # after a full pass of rejected Galerkin candidates, stop computing them
    ctx = {"a": a, "rhs": rhs, "gal_rejects": 0, "gal_reject_cap": 2 * d}

    for _ in range(cfg.max_sweeps):
        cores = _right_orth(cores)
        ctx["cores"] = cores
        # right interfaces from the right-orthogonal iterate
        pa = [None] * (d + 1)
        pn = [None] * (d + 1)
        pg = [None] * (d + 1)
        pb = [None] * (d + 1)
        pa[d], pn[d] = np.ones((1, 1, 1)), np.ones((1, 1, 1, 1))
        pg[d], pb[d] = np.ones((1, 1, 1)), np.ones((1, 1))
        for l in range(d - 1, 0, -1):
            pa[l] = _right_a(pa[l + 1], cores[l], a.cores[l])
            pn[l] = _right_n(pn[l + 1], cores[l], a.cores[l])
            pg[l] = _right_g(pg[l + 1], cores[l], a.cores[l], rhs.cores[l])
            pb[l] = _right_b(pb[l + 1], cores[l], rhs.cores[l])
        la = [None] * (d + 1)
        ln = [None] * (d + 1)
        lg = [None] * (d + 1)
        lb = [None] * (d + 1)
        la[0], ln[0] = np.ones((1, 1, 1)), np.ones((1, 1, 1, 1))
        lg[0], lb[0] = np.ones((1, 1, 1)), np.ones((1, 1))
        ctx.update(
            phi_al=la, phi_ar=pa, phi_nl=ln, phi_nr=pn,
            phi_gl=lg, phi_gr=pg, phi_bl=lb, phi_br=pb,
        )

        # forward half-sweep
        for l in range(d):
            u, grad = _solve_core(l, ctx, cfg, current_res)
            if l == d - 1:
                cores[l] = u
                break
            core, carry, k = _split_left(
                u, grad, cfg.rounding_tol, cfg.enrichment_rank, cfg.max_rank, d
            )
            cores[l] = core
            nxt = np.tensordot(carry, cores[l + 1], axes=([1], [0]))
            if k > 0:
                nxt = np.concatenate([nxt, np.zeros((k,) + nxt.shape[1:])], axis=0)
            cores[l + 1] = nxt
            la[l + 1] = _left_a(la[l], cores[l], a.cores[l])
            ln[l + 1] = _left_n(ln[l], cores[l], a.cores[l])
            lg[l + 1] = _left_g(lg[l], cores[l], a.cores[l], rhs.cores[l])
            lb[l + 1] = _left_b(lb[l], cores[l], rhs.cores[l])

        # backward half-sweep
        for l in range(d - 1, -1, -1):
            u, grad = _solve_core(l, ctx, cfg, current_res)
            if l == 0:
                cores[l] = u
                break
            core, carry, k = _split_right(
                u, grad, cfg.rounding_tol, cfg.enrichment_rank, cfg.max_rank, d
            )
            cores[l] = core
            prv = np.tensordot(cores[l - 1], carry, axes=([2], [0]))
            if k > 0:
                prv = np.concatenate([prv, np.zeros(prv.shape[:2] + (k,))], axis=2)
            cores[l - 1] = prv
            pa[l] = _right_a(pa[l + 1], cores[l], a.cores[l])
            pn[l] = _right_n(pn[l + 1], cores[l], a.cores[l])
            pg[l] = _right_g(pg[l + 1], cores[l], a.cores[l], rhs.cores[l])
            pb[l] = _right_b(pb[l + 1], cores[l], rhs.cores[l])

        iterate = TTVector([c.copy() for c in cores])
        current_res = _measure_residual(a, iterate, rhs, bnorm)
        report.residual_history.append(current_res)
        report.rank_history.append(max(iterate.ranks))
        report.compression_history.append(compression_ratio(iterate))
        if current_res < best["res"]:
            best = {"res": current_res, "cores": [c.copy() for c in cores]}
        if current_res <= cfg.residual_tol:
            report.converged = True
            break
        w = cfg.stagnation_window
        if len(report.residual_history) > w:
            past = min(report.residual_history[:-w])
            now = min(report.residual_history)
            if past <= 0 or (past - now) / max(past, 1e-300) < cfg.stagnation_drop:
                report.stagnated = True
                break

    report.wall_time = time.perf_counter() - t0
    return TTVector(best["cores"]), report
