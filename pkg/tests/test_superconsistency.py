"""Tests for the upwinded collocation nodes and the stabilized 1-D operator."""

import numpy as np
import pytest

from ttss.spectral1d import gauss_nodes, gll_nodes, legendre_eval
from ttss.superconsistency import (
    assemble_sc_1d_operator,
    plain_grid,
    rhs_collocator,
    sc_grid,
    superconsistent_nodes,
)


def node_equation_residual(n, eps, beta, z):
    p, dp = legendre_eval(n, z)
    return np.abs(eps * dp - beta * p).max()


class TestNodes:
    def test_beta_zero_gives_interior_gll(self):
        z = superconsistent_nodes(7, 1.0, 0.0)
        np.testing.assert_allclose(z, gll_nodes(7)[1:-1], atol=1e-13)

    def test_convection_limit_is_gauss(self):
        # the n-1 collocation points land on the first n-1 zeros of P_n for
        # beta > 0 (the root nearest the outflow boundary is unused)
        z = superconsistent_nodes(7, 1e-12, 1.0)
        np.testing.assert_allclose(z, gauss_nodes(7)[:-1], atol=1e-6)

    def test_diffusion_limit_is_gll(self):
        # distance to the interior GLL set scales like 1.71e-2 / eps at n=7
        z = superconsistent_nodes(7, 20.0, 1.0)
        np.testing.assert_allclose(z, gll_nodes(7)[1:-1], atol=1e-3)
        z = superconsistent_nodes(7, 10.0, 1.0)
        assert np.abs(z - gll_nodes(7)[1:-1]).max() == pytest.approx(1.709e-3, rel=1e-2)

    @pytest.mark.parametrize("eps,beta", [(0.02, 1.0), (1.0, 1.0), (1e-6, 0.5)])
    def test_equation_residual_and_brackets(self, eps, beta):
        n = 7
        z = superconsistent_nodes(n, eps, beta)
        assert len(z) == n - 1
        assert node_equation_residual(n, eps, beta, z) <= 1e-12 * max(eps, beta) * n * n
        g, h = gauss_nodes(n), gll_nodes(n)[1:-1]
        assert np.all(z > g[:-1]) and np.all(z < h)

    def test_mirror_symmetry(self):
        for n in (6, 7):
            zp = superconsistent_nodes(n, 0.03, 1.0)
            zm = superconsistent_nodes(n, 0.03, -1.0)
            np.testing.assert_allclose(zm, -zp[::-1], atol=1e-12)
            assert node_equation_residual(n, 0.03, -1.0, zm) <= 1e-12 * n * n

    def test_monotone_migration(self):
        n = 9
        prev = superconsistent_nodes(n, 1.0, 1.0)
        for k in range(1, 13):
            cur = superconsistent_nodes(n, 10.0 ** (-k), 1.0)
            # each node moves monotonically toward its Gauss bracket endpoint
            assert np.all(cur <= prev + 1e-14)
            prev = cur

    def test_invalid_epsilon(self):
        with pytest.raises(ValueError):
            superconsistent_nodes(7, 0.0, 1.0)
        with pytest.raises(ValueError):
            superconsistent_nodes(7, -1.0, 1.0)


class TestScGrid:
    def test_plain_c1_matches_interior_d1(self):
        g = plain_grid(8)
        np.testing.assert_allclose(g.c1, g.base.d1[1:-1], atol=1e-9)
        np.testing.assert_allclose(g.c0, np.eye(9)[1:-1], atol=0)

    def test_c0_rows_sum_to_one(self):
        g = sc_grid(10, 0.01, 1.0)
        np.testing.assert_allclose(g.c0.sum(axis=1), np.ones(9), atol=1e-12)

    def test_a0_boundary_rows_are_unit(self):
        g = sc_grid(6, 0.1, 1.0)
        np.testing.assert_allclose(g.a0[0], np.eye(7)[0], atol=0)
        np.testing.assert_allclose(g.a0[-1], np.eye(7)[-1], atol=0)

    @pytest.mark.parametrize("n", [6, 11])
    def test_operator_consistency_on_polynomials(self, n):
        # collocated operator on samples q(x) equals (beta q' - eps q'' + rho q)(z)
        rng = np.random.default_rng(7 + n)
        eps, beta, rho = 0.05, 1.3, 0.7
        g = sc_grid(n, eps, beta)
        a = assemble_sc_1d_operator(g, rho)
        for _ in range(4):
            q = np.polynomial.Polynomial(rng.uniform(-1, 1, n + 1))
            want = beta * q.deriv()(g.coll_nodes) - eps * q.deriv(2)(g.coll_nodes)
            want += rho * q(g.coll_nodes)
            got = (a @ q(g.base.rep_nodes))[1:-1]
            ref = max(1.0, np.abs(want).max())
            assert np.abs(got - want).max() <= 1e-8 * ref

    def test_pure_poisson_parabola(self):
        # -eps u'' = 1, u(+-1) = 0  ->  u = (1 - x^2) / (2 eps)
        eps = 0.37
        g = sc_grid(9, eps, 0.0)
        a = assemble_sc_1d_operator(g, 0.0)
        u = np.linalg.solve(a, rhs_collocator(g, 1.0))
        want = (1.0 - g.base.rep_nodes**2) / (2.0 * eps)
        np.testing.assert_allclose(u, want, atol=1e-10)

    def test_boundary_layer_consistency(self):
        # exact solution of beta u' - eps u'' = 1, u(+-1)=0, sampled at the
        # representation nodes, nearly satisfies the collocated equations at
        # the upstream collocation points; the residual grows geometrically
        # toward the unresolved outflow layer.  Plain collocation is more
        # than an order of magnitude worse at every point.
        n, eps, beta = 16, 1e-6, 1.0
        g = sc_grid(n, eps, beta)
        a = assemble_sc_1d_operator(g, 0.0)
        x = g.base.rep_nodes
        # u(x) = (x+1)/beta - (2/beta) * (exp(beta(x-1)/eps) - q) / (1 - q),
        # q = exp(-2 beta/eps); underflows to the ramp except at x = 1
        u = (x + 1.0) / beta - (2.0 / beta) * np.exp(beta * (x - 1.0) / eps)
        resid = np.abs((a @ u)[1:-1] - 1.0)
        assert resid[:8].max() <= 2.5e-2
        gp = plain_grid(n)
        ap = np.zeros((n + 1, n + 1))
        ap[1:-1] = beta * gp.c1 - eps * gp.c2
        ap[0, 0] = ap[-1, -1] = 1.0
        resid_plain = np.abs((ap @ u)[1:-1] - 1.0)
        assert np.all(resid_plain[:8] > 10.0 * resid[:8])


class TestRhs:
    def test_callable_and_bcs(self):
        g = sc_grid(5, 0.1, 1.0)
        r = rhs_collocator(g, lambda z: z**2, bc=(2.0, 3.0))
        assert r[0] == 2.0 and r[-1] == 3.0
        np.testing.assert_allclose(r[1:-1], g.coll_nodes**2, atol=0)
