"""Discrete train operators for the convection-diffusion-reaction equation.

Each dimension contributes three (n+1) x (n+1) collocation blocks on its row
grid [-1, z_1, ..., z_{n-1}, +1]: a0 (basis evaluation), a1 and a2 (first and
second basis derivatives).  Physics operators are strong-Kronecker chains of
these blocks composed with diagonal coefficient operators, e.g. the diffusion
part is diag(eps at rows) applied to sum_l a0 x ... x a2_l x ... x a0.  The
a0 companions make every interior row a point-collocation equation at the
tensor collocation point; on plain grids a0 is the identity, recovering
ordinary tensor-product collocation.  Dirichlet rows enter through a rank-1
interior mask: A = M (-diff + conv + react) + (I - M).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coefficients import Coefficient, coefficient_from_json, constant_coefficient
from .superconsistency import ScGrid1D, plain_grid, sc_grid
from .tensor_train import (
    TTOperator,
    TTVector,
    tt_add,
    tt_apply,
    tt_diag_operator,
    tt_from_separable,
    tt_identity_operator,
    tt_op_add,
    tt_op_compose,
    tt_op_round,
    tt_op_scale,
    tt_round,
    tt_scale,
)

__all__ = [
    "ProblemSpec",
    "TimeSpec",
    "DiscreteOperatorSet",
    "build_grids",
    "assemble_diffusion",
    "assemble_convection",
    "assemble_reaction",
    "assemble_opset",
    "impose_dirichlet",
    "assemble_spacetime",
    "interior_mask",
    "problem_from_config",
    "OP_ROUND_TOL",
]

OP_ROUND_TOL = 1e-13


@dataclass
class TimeSpec:
    t_end: float
    degree: int | None = None
    dt: float | None = None
    scheme: str | None = None  # backward_euler | crank_nicolson | spacetime

    def __post_init__(self):
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")


@dataclass
class ProblemSpec:
    """Continuous problem data plus discretization choices.

    Coefficients are `Coefficient` instances over the spatial dimensions;
    `dirichlet` and `initial` may be None (homogeneous / not time-dependent).
    `placement_beta` optionally overrides the per-dimension convection scale
    used to place collocation nodes.
    """

    dims: int
    degrees: list
    epsilon: Coefficient
    beta: list
    rho: Coefficient
    rhs: Coefficient
    dirichlet: Coefficient | None = None
    initial: Coefficient | None = None
    time: TimeSpec | None = None
    stabilization: str = "superconsistent"
    placement_beta: list | None = None

    def __post_init__(self):
        if self.dims < 1:
            raise ValueError("need at least one spatial dimension")
        if len(self.degrees) != self.dims:
            raise ValueError("one degree per dimension required")
        if len(self.beta) != self.dims:
            raise ValueError("one convection coefficient per dimension required")
        if self.stabilization not in ("superconsistent", "plain"):
            raise ValueError("stabilization must be 'superconsistent' or 'plain'")
        self._validate_coefficients()

    def _validate_coefficients(self):
        rng = np.random.default_rng(0)
        pts = rng.uniform(-1.0, 1.0, size=(4096, self.dims))
        eps = self.epsilon(pts)
        if eps.min() <= 0:
            raise ValueError("diffusion coefficient must be uniformly positive")
        rho = self.rho(pts)
        if rho.min() < -1e-12:
            raise ValueError("reaction coefficient must be non-negative")

    def placement_scale(self, axis_nodes):
        """Per-dimension convection scale used for node placement.

        A constant component keeps its sign (mirrored upwinding); otherwise
        the conservative bound sum_k |s_k| prod_l max|f_(k,l)| is used, which
        is the most upwinded choice for sign-varying fields.
        """
        if self.placement_beta is not None:
            return [float(b) for b in self.placement_beta]
        out = []
        for b in self.beta:
            if b.is_constant:
                out.append(float(b.constant_value()))
            else:
                out.append(float(b.max_abs_bound(axis_nodes)))
        return out


@dataclass
class DiscreteOperatorSet:
    """Assembled train operators sharing the (n_l + 1)-sized modes."""

    grids: list
    diffusion: TTOperator
    convection: TTOperator
    reaction: TTOperator
    mask_interior: TTOperator
    spatial: TTOperator
    epsilon_scale: float = 1.0


def build_grids(spec):
    """One collocation grid per spatial dimension."""
    if spec.stabilization == "plain":
        return [plain_grid(n) for n in spec.degrees]
    axes = [np.linspace(-1, 1, 65) for _ in range(spec.dims)]
    scales = spec.placement_scale(axes)
    eps0 = (
        spec.epsilon.constant_value()
        if spec.epsilon.is_constant
        else float(spec.epsilon(np.zeros((1, spec.dims)))[0])
    )
    grids = []
    for n, b in zip(spec.degrees, scales):
        if b == 0.0:
            grids.append(sc_grid(n, max(eps0, 1e-300), 0.0))
        else:
            grids.append(sc_grid(n, max(eps0, 1e-300), b))
    return grids


def _chain(grids, special=None):
    """Strong-Kronecker chain of a0 blocks with one block replaced.

    special = None gives the pure evaluation chain a0 x a0 x ... x a0;
    special = (l, X) puts matrix X at position l.  Rank-1 operator.
    """
    cores = []
    for l, g in enumerate(grids):
        block = g.a0 if special is None or special[0] != l else special[1]
        n = block.shape[0]
        cores.append(block.reshape(1, n, n, 1))
    return TTOperator(cores)


def _banded_chain(grids, blocks):
    """sum_l a0 x ... x blocks[l] x ... x a0 as a rank-2 operator chain."""
    d = len(grids)
    if d == 1:
        b = blocks[0]
        return TTOperator([b.reshape(1, *b.shape, 1)])
    cores = []
    for l, g in enumerate(grids):
        n = g.a0.shape[0]
        if l == 0:
            core = np.zeros((1, n, n, 2))
            core[0, :, :, 0] = blocks[0]
            core[0, :, :, 1] = g.a0
        elif l == d - 1:
            core = np.zeros((2, n, n, 1))
            core[0, :, :, 0] = g.a0
            core[1, :, :, 0] = blocks[l]
        else:
            core = np.zeros((2, n, n, 2))
            core[0, :, :, 0] = g.a0
            core[1, :, :, 0] = blocks[l]
            core[1, :, :, 1] = g.a0
        cores.append(core)
    return TTOperator(cores)


def row_axes(grids):
    return [g.row_nodes for g in grids]


def rep_axes(grids):
    return [g.base.rep_nodes for g in grids]


def assemble_diffusion(grids, epsilon_tt):
    """diag(eps at collocation rows) applied to the second-derivative chain."""
    chain = _banded_chain(grids, [g.a2 for g in grids])
    op = tt_op_compose(tt_diag_operator(epsilon_tt), chain)
    return tt_op_round(op, OP_ROUND_TOL)


def assemble_convection(grids, beta_tts):
    """sum_l diag(beta_l at rows) applied to the first-derivative chain of l."""
    if len(beta_tts) != len(grids):
        raise ValueError("one convection coefficient per dimension required")
    total = None
    for l, (g, b_tt) in enumerate(zip(grids, beta_tts)):
        term = tt_op_compose(tt_diag_operator(b_tt), _chain(grids, (l, g.a1)))
        total = term if total is None else tt_op_add(total, term)
    return tt_op_round(total, OP_ROUND_TOL)


def assemble_reaction(grids, rho_tt):
    """diag(rho at rows) applied to the evaluation chain."""
    op = tt_op_compose(tt_diag_operator(rho_tt), _chain(grids))
    return tt_op_round(op, OP_ROUND_TOL)


def interior_mask(modes, open_axes=()):
    """Rank-1 diagonal operator selecting interior collocation rows.

    Every axis masks both its first and last row, except axes listed in
    open_axes which mask only the first row (the time axis: the equation is
    collocated at the final time as well).
    """
    factors = []
    for l, n in enumerate(modes):
        v = np.ones(n)
        v[0] = 0.0
        if l not in open_axes:
            v[-1] = 0.0
        factors.append(v)
    return tt_diag_operator(tt_from_separable([(1.0, factors)]))


def assemble_opset(spec, grids=None):
    """All physics operators plus the masked spatial operator."""
    grids = grids if grids is not None else build_grids(spec)
    rows = row_axes(grids)
    eps_tt = spec.epsilon.sample_tt(rows)
    beta_tts = [b.sample_tt(rows) for b in spec.beta]
    rho_tt = spec.rho.sample_tt(rows)
    diffusion = assemble_diffusion(grids, eps_tt)
    convection = assemble_convection(grids, beta_tts)
    reaction = assemble_reaction(grids, rho_tt)
    modes = tuple(g.a0.shape[0] for g in grids)
    mask = interior_mask(modes)
    phys = tt_op_add(
        tt_op_scale(diffusion, -1.0), tt_op_add(convection, reaction)
    )
    eye = tt_identity_operator(modes)
    spatial = tt_op_add(
        tt_op_compose(mask, phys), tt_op_add(eye, tt_op_scale(mask, -1.0))
    )
    spatial = tt_op_round(spatial, OP_ROUND_TOL)
    return DiscreteOperatorSet(
        grids=grids,
        diffusion=diffusion,
        convection=convection,
        reaction=reaction,
        mask_interior=mask,
        spatial=spatial,
    )


def boundary_data_tt(spec, grids):
    """Dirichlet data sampled on the representation grids (zero if absent)."""
    reps = rep_axes(grids)
    if spec.dirichlet is None:
        return tt_from_separable([(0.0, [np.ones(len(ax)) for ax in reps])])
    return spec.dirichlet.sample_tt(reps)


def impose_dirichlet(opset, spec, rhs_tt=None, g_tt=None, rounding_tol=1e-12):
    """Masked system (A, rhs): interior collocation rows plus identity rows.

    rhs = M b(collocation rows) + (I - M) g(representation nodes); both
    tensors may be passed explicitly to override the spec descriptors.
    """
    if rhs_tt is None:
        rhs_tt = spec.rhs.sample_tt(row_axes(opset.grids))
    if g_tt is None:
        g_tt = boundary_data_tt(spec, opset.grids)
    mask = opset.mask_interior
    modes = tuple(g.a0.shape[0] for g in opset.grids)
    eye = tt_identity_operator(modes)
    anti = tt_op_add(eye, tt_op_scale(mask, -1.0))
    rhs = tt_add(tt_apply(mask, rhs_tt), tt_apply(anti, g_tt))
    return opset.spatial, tt_round(rhs, rounding_tol)


def _prepend_time_core(op, nt, block=None):
    """Extend a spatial operator with a leading time core (identity default)."""
    b = np.eye(nt) if block is None else block
    lead = b.reshape(1, nt, nt, 1)
    return TTOperator([lead] + [c.copy() for c in op.cores])


def assemble_spacetime(opset, spec, rhs_tt=None, g_tt=None, rounding_tol=1e-12):
    """(d+1)-mode space-time system; time is mode 0 on plain Lobatto nodes.

    The time interval [0, T] is mapped to [-1, 1]; the row at t = -1 is an
    identity row carrying the initial condition, and the equation itself is
    collocated at all later time nodes including t = +1.
    """
    if spec.time is None or spec.time.degree is None:
        raise ValueError("space-time assembly needs a time degree")
    nt_deg = spec.time.degree
    tgrid = plain_grid(nt_deg)
    nt = nt_deg + 1
    jac_t = 2.0 / spec.time.t_end  # d/dt = jac_t * d/dtau
    dt_block = jac_t * tgrid.a1

    phys = tt_op_add(
        tt_op_scale(opset.diffusion, -1.0),
        tt_op_add(opset.convection, opset.reaction),
    )
    time_deriv = _prepend_time_core(
        _chain(opset.grids), nt, block=dt_block
    )
    full_phys = tt_op_add(time_deriv, _prepend_time_core(phys, nt))

    modes = (nt,) + tuple(g.a0.shape[0] for g in opset.grids)
    mask = interior_mask(modes, open_axes=(0,))
    eye = tt_identity_operator(modes)
    a = tt_op_add(
        tt_op_compose(mask, full_phys), tt_op_add(eye, tt_op_scale(mask, -1.0))
    )
    a = tt_op_round(a, OP_ROUND_TOL)

    if rhs_tt is None:
        if spec.rhs.dims == spec.dims + 1:
            axes = [_time_axis_physical(tgrid, spec.time.t_end)] + row_axes(opset.grids)
            rhs_tt = spec.rhs.sample_tt(axes)
        else:
            rhs_spacetime = spec.rhs.with_prepended_axis()
            axes = [tgrid.row_nodes] + row_axes(opset.grids)
            rhs_tt = rhs_spacetime.sample_tt(axes)
    if g_tt is None:
        g_tt = _spacetime_boundary_tt(spec, opset.grids, tgrid)
    anti = tt_op_add(eye, tt_op_scale(mask, -1.0))
    rhs = tt_add(tt_apply(mask, rhs_tt), tt_apply(anti, g_tt))
    return a, tt_round(rhs, rounding_tol), tgrid


def _time_axis_physical(tgrid, t_end):
    return 0.5 * (tgrid.row_nodes + 1.0) * t_end


def _spacetime_boundary_tt(spec, grids, tgrid):
    """Initial slice at t = -1 plus spatial-boundary Dirichlet data.

    When `dirichlet` is a (d+1)-dimensional coefficient it is sampled over
    the whole space-time representation grid (its masked restriction is what
    enters the system); otherwise homogeneous boundary data is combined with
    the initial condition as an indicator term at the first time node.
    """
    reps = rep_axes(grids)
    nt = tgrid.degree + 1
    if spec.dirichlet is not None and spec.dirichlet.dims == spec.dims + 1:
        axes = [_time_axis_physical(tgrid, spec.time.t_end)] + reps
        return spec.dirichlet.sample_tt(axes)
    e0 = np.zeros(nt)
    e0[0] = 1.0
    terms = []
    if spec.initial is not None:
        for s, fs in spec.initial.terms:
            terms.append((s, [e0] + [f.value(ax) for f, ax in zip(fs, reps)]))
    if spec.dirichlet is not None:
        rest = np.ones(nt) - e0
        for s, fs in spec.dirichlet.terms:
            terms.append((s, [rest] + [f.value(ax) for f, ax in zip(fs, reps)]))
    if not terms:
        terms = [(0.0, [np.ones(nt)] + [np.ones(len(ax)) for ax in reps])]
    return tt_from_separable(terms)


def problem_from_config(cfg):
    """Build a ProblemSpec from a parsed JSON configuration dict.

    Keys: dims, degrees, epsilon, beta (list), rho, rhs, bc, initial, time,
    stabilization, placement_beta.  Coefficients use the grammar documented
    in coefficients.py; bc/initial may be omitted or null.
    """
    dims = int(cfg["dims"])
    degrees = [int(n) for n in cfg["degrees"]]
    if len(degrees) == 1 and dims > 1:
        degrees = degrees * dims
    eps = coefficient_from_json(cfg.get("epsilon", 1.0), dims)
    beta_cfg = cfg.get("beta", [0.0] * dims)
    beta = [coefficient_from_json(b, dims) for b in beta_cfg]
    rho = coefficient_from_json(cfg.get("rho", 0.0), dims)
    rhs = coefficient_from_json(cfg.get("rhs", 0.0), dims)
    time = None
    if cfg.get("time"):
        t = cfg["time"]
        time = TimeSpec(
            t_end=float(t["t_end"]),
            degree=t.get("degree"),
            dt=t.get("dt"),
            scheme=t.get("scheme"),
        )
    extra_dims = dims + 1 if time else dims

    def opt_coeff(key):
        val = cfg.get(key)
        if val in (None, "zero", 0, 0.0):
            return None
        want = dims
        if isinstance(val, dict) and val.get("space_time"):
            want = extra_dims
            val = {"terms": val["terms"]}
        return coefficient_from_json(val, want)

    return ProblemSpec(
        dims=dims,
        degrees=degrees,
        epsilon=eps,
        beta=beta,
        rho=rho,
        rhs=rhs,
        dirichlet=opt_coeff("bc"),
        initial=opt_coeff("initial"),
        time=time,
        stabilization=cfg.get("stabilization", "superconsistent"),
        placement_beta=cfg.get("placement_beta"),
    )
