"""Time integration: implicit marching in step-and-truncate style plus the
space-time one-shot solve.

Backward Euler advances M f^{k+1} + dt L f^{k+1} = M f^k + dt b (boundary
rows enforce the Dirichlet data); Crank-Nicolson uses the trapezoidal split
M + dt/2 L on the left and M - dt/2 L on the right.  M is the evaluation
chain collocating states at the interior collocation points, which is the
exact identity on plain grids.  Each accepted state is re-truncated to the
step rounding tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MarchStepError
from .operator_assembly import (
    assemble_spacetime,
    boundary_data_tt,
    interior_mask,
    rep_axes,
    row_axes,
    _chain,
)
from .tensor_train import (
    DENSE_CAP,
    tt_add,
    tt_apply,
    tt_full,
    tt_identity_operator,
    tt_norm,
    tt_op_add,
    tt_op_compose,
    tt_op_round,
    tt_op_scale,
    tt_round,
    tt_scale,
    compression_ratio,
)
from .tt_solver import SolverConfig, solve

__all__ = [
    "MarchConfig",
    "MarchDiagnostics",
    "backward_euler_march",
    "crank_nicolson_march",
    "spacetime_solve",
]


@dataclass
class MarchConfig:
    dt: float
    t_end: float
    scheme: str = "backward_euler"  # backward_euler | crank_nicolson
    step_rounding_tol: float = 1e-8
    store_stride: int = 1
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(residual_tol=1e-10))

    def __post_init__(self):
        if self.dt <= 0 or self.t_end <= 0 or self.dt > self.t_end:
            raise ValueError("need 0 < dt <= t_end")
        if self.step_rounding_tol <= 0:
            raise ValueError("step rounding tolerance must be positive")
        if self.scheme not in ("backward_euler", "crank_nicolson"):
            raise ValueError("scheme must be backward_euler or crank_nicolson")

    @property
    def n_steps(self):
        return int(np.ceil(self.t_end / self.dt - 1e-12))


@dataclass
class MarchDiagnostics:
    """Per-step scalars; `rows()` matches the trajectory CSV column order."""

    steps: list = field(default_factory=list)
    times: list = field(default_factory=list)
    peak_norms: list = field(default_factory=list)
    max_ranks: list = field(default_factory=list)
    compressions: list = field(default_factory=list)
    residuals: list = field(default_factory=list)

    HEADER = "step,t,peak_norm,max_rank,compression,residual"

    def append(self, step, t, peak, rank, comp, res):
        self.steps.append(step)
        self.times.append(t)
        self.peak_norms.append(peak)
        self.max_ranks.append(rank)
        self.compressions.append(comp)
        self.residuals.append(res)

    def rows(self):
        return list(
            zip(
                self.steps,
                self.times,
                self.peak_norms,
                self.max_ranks,
                self.compressions,
                self.residuals,
            )
        )

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.HEADER + "\n")
            for row in self.rows():
                fh.write(
                    f"{row[0]},{row[1]:.12g},{row[2]:.12g},{row[3]},"
                    f"{row[4]:.6g},{row[5]:.6g}\n"
                )


def _peak(state):
    total = int(np.prod([float(n) for n in state.mode_sizes]))
    if total <= 10**6:
        return float(np.abs(tt_full(state, cap=DENSE_CAP)).max())
    return float("nan")


def _march_operators(opset, spec, cfg):
    """Left/right operators of one implicit step, boundary rows included."""
    grids = opset.grids
    modes = tuple(g.a0.shape[0] for g in grids)
    mask = opset.mask_interior
    eye = tt_identity_operator(modes)
    anti = tt_op_add(eye, tt_op_scale(mask, -1.0))
    mass = _chain(grids)  # interior rows evaluate at the collocation points
    phys = tt_op_add(
        tt_op_scale(opset.diffusion, -1.0),
        tt_op_add(opset.convection, opset.reaction),
    )
    if cfg.scheme == "backward_euler":
        left_in = tt_op_add(mass, tt_op_scale(phys, cfg.dt))
        right_in = mass
    else:
        left_in = tt_op_add(mass, tt_op_scale(phys, 0.5 * cfg.dt))
        right_in = tt_op_add(mass, tt_op_scale(phys, -0.5 * cfg.dt))
    left = tt_op_add(tt_op_compose(mask, left_in), anti)
    right = tt_op_compose(mask, right_in)
    tol = 1e-14
    return tt_op_round(left, tol), tt_op_round(right, tol), mask, anti


def _march(opset, spec, cfg):
    """Shared driver for both implicit schemes."""
    grids = opset.grids
    if spec.initial is None:
        raise ValueError("marching needs an initial condition")
    state = tt_round(spec.initial.sample_tt(rep_axes(grids)), 1e-14)
    left, right, mask, anti = _march_operators(opset, spec, cfg)
    g_tt = boundary_data_tt(spec, grids)
    bc_term = tt_apply(anti, g_tt)
    source = None
    if not (spec.rhs.is_constant and spec.rhs.constant_value() == 0.0):
        b_rows = spec.rhs.sample_tt(row_axes(grids))
        source = tt_scale(tt_apply(mask, b_rows), cfg.dt)

    diag = MarchDiagnostics()
    diag.append(0, 0.0, _peak(state), max(state.ranks), compression_ratio(state), 0.0)
    trajectory = [(0.0, state)]
    t = 0.0
    for step in range(1, cfg.n_steps + 1):
        t = min(step * cfg.dt, cfg.t_end)
        rhs = tt_add(tt_apply(right, state), bc_term)
        if source is not None:
            rhs = tt_add(rhs, source)
        rhs = tt_round(rhs, 0.01 * cfg.step_rounding_tol)
        new_state, rep = solve(left, rhs, x0=state, cfg=cfg.solver)
        achieved = min(rep.residual_history)
        if not rep.converged and achieved > 50.0 * cfg.solver.residual_tol:
            raise MarchStepError(
                step,
                f"inner solver stagnated at residual {achieved:.3e}",
            )
        state = tt_round(new_state, cfg.step_rounding_tol)
        diag.append(
            step,
            t,
            _peak(state),
            max(state.ranks),
            compression_ratio(state),
            rep.residual_history[-1],
        )
        if step % cfg.store_stride == 0 or step == cfg.n_steps:
            trajectory.append((t, state))
    return trajectory, diag


def backward_euler_march(opset, spec, cfg):
    """First-order implicit march; returns ([(t, state)...], diagnostics)."""
    if cfg.scheme != "backward_euler":
        cfg = MarchConfig(
            dt=cfg.dt, t_end=cfg.t_end, scheme="backward_euler",
            step_rounding_tol=cfg.step_rounding_tol,
            store_stride=cfg.store_stride, solver=cfg.solver,
        )
    return _march(opset, spec, cfg)


def crank_nicolson_march(opset, spec, cfg):
    """Second-order trapezoidal march; returns ([(t, state)...], diagnostics)."""
    if cfg.scheme != "crank_nicolson":
        cfg = MarchConfig(
            dt=cfg.dt, t_end=cfg.t_end, scheme="crank_nicolson",
            step_rounding_tol=cfg.step_rounding_tol,
            store_stride=cfg.store_stride, solver=cfg.solver,
        )
    return _march(opset, spec, cfg)


def spacetime_solve(opset, spec, solver_cfg=None, rhs_tt=None, g_tt=None):
    """One-shot (d+1)-mode solve; returns (solution, report, time grid)."""
    solver_cfg = solver_cfg or SolverConfig()
    a, rhs, tgrid = assemble_spacetime(opset, spec, rhs_tt=rhs_tt, g_tt=g_tt)
    x, report = solve(a, rhs, cfg=solver_cfg)
    return x, report, tgrid
