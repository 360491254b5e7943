"""Marching and space-time tests: analytic decay rates, scheme orders,
boundary enforcement, and the exponential-in-time manufactured check."""

import numpy as np
import pytest

from ttss.coefficients import Coefficient, Const, Exp, SinPiK, constant_coefficient
from ttss.errors import MarchStepError
from ttss.operator_assembly import ProblemSpec, TimeSpec, assemble_opset
from ttss.tensor_train import tt_full
from ttss.time_integration import (
    MarchConfig,
    backward_euler_march,
    crank_nicolson_march,
    spacetime_solve,
)
from ttss.tt_solver import SolverConfig


def heat_spec(n=12, eps=0.2):
    # f_t - eps f_xx = 0, f0 = sin(pi x), homogeneous walls
    return ProblemSpec(
        dims=1,
        degrees=[n],
        epsilon=constant_coefficient(eps, 1),
        beta=[constant_coefficient(0.0, 1)],
        rho=constant_coefficient(0.0, 1),
        rhs=constant_coefficient(0.0, 1),
        initial=Coefficient(1, [(1.0, [SinPiK(1)])]),
        time=TimeSpec(t_end=0.5),
    )


def decay_rate(trajectory):
    times = np.array([t for t, _ in trajectory[1:]])
    peaks = np.array([np.abs(tt_full(s)).max() for _, s in trajectory[1:]])
    slope = np.polyfit(times, np.log(peaks), 1)[0]
    return -slope


class TestMarches:
    def test_zero_operator_constant_trajectory(self):
        # no diffusion/convection/reaction acting on a boundary-compatible
        # state: every step reproduces it
        spec = ProblemSpec(
            dims=1,
            degrees=[8],
            epsilon=constant_coefficient(1.0, 1),
            beta=[constant_coefficient(0.0, 1)],
            rho=constant_coefficient(0.0, 1),
            rhs=constant_coefficient(0.0, 1),
            initial=Coefficient(1, [(1.0, [Const(1.0)])]),
            dirichlet=Coefficient(1, [(1.0, [Const(1.0)])]),
            time=TimeSpec(t_end=0.2),
        )
        opset = assemble_opset(spec)
        cfg = MarchConfig(dt=0.05, t_end=0.2)
        traj, diag = backward_euler_march(opset, spec, cfg)
        for _, state in traj:
            np.testing.assert_allclose(tt_full(state), np.ones(9), atol=1e-8)
        assert len(traj) == 5

    def test_heat_decay_backward_euler(self):
        spec = heat_spec()
        opset = assemble_opset(spec)
        lam = spec.epsilon.constant_value() * np.pi**2
        rates = []
        for dt in (0.025, 0.0125):
            traj, _ = backward_euler_march(
                opset, spec, MarchConfig(dt=dt, t_end=0.5)
            )
            rates.append(decay_rate(traj))
        err = np.abs(np.array(rates) - lam)
        assert err[0] <= 0.2 * lam            # first order, coarse step
        assert err[1] <= 0.6 * err[0]         # roughly halves with dt
        # effective BE rate is ln(1 + lam dt)/dt, i.e. below lam
        assert rates[0] < lam
        assert err[0] == pytest.approx(lam**2 * 0.025 / 2, rel=0.15)

    def test_heat_decay_crank_nicolson_order(self):
        spec = heat_spec()
        opset = assemble_opset(spec)
        lam = spec.epsilon.constant_value() * np.pi**2
        errs = []
        for dt in (0.05, 0.025):
            traj, _ = crank_nicolson_march(
                opset, spec, MarchConfig(dt=dt, t_end=0.5, scheme="crank_nicolson")
            )
            errs.append(abs(decay_rate(traj) - lam))
        assert errs[1] <= 0.35 * errs[0]      # ~4x shrink when dt halves
        assert errs[0] <= 0.02 * lam

    def test_boundary_enforced_every_step(self):
        spec = heat_spec(n=10)
        opset = assemble_opset(spec)
        cfg = MarchConfig(
            dt=0.05, t_end=0.25,
            solver=SolverConfig(residual_tol=1e-12),
        )
        traj, _ = backward_euler_march(opset, spec, cfg)
        for _, state in traj:
            vals = tt_full(state)
            assert abs(vals[0]) <= 1e-10 and abs(vals[-1]) <= 1e-10

    def test_diagnostics_rows(self):
        spec = heat_spec(n=8)
        opset = assemble_opset(spec)
        traj, diag = backward_euler_march(opset, spec, MarchConfig(dt=0.1, t_end=0.3))
        rows = diag.rows()
        assert len(rows) == 4  # initial state + 3 steps
        assert rows[0][0] == 0 and rows[-1][0] == 3
        assert diag.HEADER.split(",") == [
            "step", "t", "peak_norm", "max_rank", "compression", "residual",
        ]

    def test_stagnation_propagates_with_step(self):
        spec = heat_spec(n=10)
        opset = assemble_opset(spec)
        # absurdly tight tolerance with rank 1 and no enrichment cannot converge
        cfg = MarchConfig(
            dt=0.1, t_end=0.3,
            solver=SolverConfig(residual_tol=1e-30, max_rank=1,
                                enrichment_rank=0, max_sweeps=8),
        )
        with pytest.raises(MarchStepError) as err:
            backward_euler_march(opset, spec, cfg)
        assert err.value.step == 1

    def test_config_validation(self):
        with pytest.raises(ValueError):
            MarchConfig(dt=0.0, t_end=1.0)
        with pytest.raises(ValueError):
            MarchConfig(dt=2.0, t_end=1.0)
        with pytest.raises(ValueError):
            MarchConfig(dt=0.1, t_end=1.0, scheme="rk4")


class TestSpacetime:
    def test_exponential_in_time(self):
        # manufactured f(x, t) = e^t (constant in space): f_t = e^t = b
        spec = ProblemSpec(
            dims=1,
            degrees=[4],
            epsilon=constant_coefficient(1.0, 1),
            beta=[constant_coefficient(0.0, 1)],
            rho=constant_coefficient(0.0, 1),
            rhs=Coefficient(2, [(1.0, [Exp(1.0), Const(1.0)])]),
            dirichlet=Coefficient(2, [(1.0, [Exp(1.0), Const(1.0)])]),
            initial=Coefficient(1, [(np.exp(-1.0), [Const(1.0)])]),
            time=TimeSpec(t_end=2.0, degree=10),
        )
        # time axis rescaled to [-1, 1]: e^t in physical time = e^(tau+1)
        # handled by sampling the coefficient at physical times
        opset = assemble_opset(spec)
        x, rep, tgrid = spacetime_solve(
            opset, spec, SolverConfig(residual_tol=1e-11, max_rank=20)
        )
        assert rep.converged
        vals = tt_full(x)
        t_phys = 0.5 * (tgrid.base.rep_nodes + 1.0) * 2.0
        want = np.exp(t_phys)[:, None] * np.ones(5)[None, :]
        assert np.abs(vals - want).max() <= 1e-8 * np.abs(want).max()

    def test_initial_slice_exact(self):
        spec = heat_spec(n=8)
        spec.time = TimeSpec(t_end=0.5, degree=8)
        opset = assemble_opset(spec)
        x, rep, tgrid = spacetime_solve(
            opset, spec, SolverConfig(residual_tol=1e-11, max_rank=20)
        )
        vals = tt_full(x)
        want0 = np.sin(np.pi * opset.grids[0].base.rep_nodes)
        assert np.abs(vals[0] - want0).max() <= 1e-9

    def test_heat_agreement_with_marches(self):
        # CN and the space-time solve agree to O(dt^2) on the heat profile
        spec = heat_spec(n=10)
        spec.time = TimeSpec(t_end=0.5, degree=12)
        opset = assemble_opset(spec)
        xst, rep, tgrid = spacetime_solve(
            opset, spec, SolverConfig(residual_tol=1e-11, max_rank=20)
        )
        final_st = tt_full(xst)[-1]
        dt = 0.0125
        traj_cn, _ = crank_nicolson_march(
            opset, spec, MarchConfig(dt=dt, t_end=0.5, scheme="crank_nicolson")
        )
        traj_be, _ = backward_euler_march(
            opset, spec, MarchConfig(dt=dt, t_end=0.5)
        )
        final_cn = tt_full(traj_cn[-1][1])
        final_be = tt_full(traj_be[-1][1])
        scale = np.abs(final_st).max()
        assert np.abs(final_cn - final_st).max() <= 20 * dt**2 * scale
        assert np.abs(final_be - final_st).max() <= 20 * dt * scale
        assert np.abs(final_be - final_cn).max() <= 20 * dt * scale
