"""Tests for the tensor-train core: decomposition, rounding, arithmetic,
maxvol/cross interpolation, and the TTS2 container.  Dense numpy
reconstructions serve as the oracle throughout."""

import io

import numpy as np
import pytest

from ttss.errors import CapExceededError, CrossConvergenceWarning, ShapeError
from ttss.tensor_train import (
    TTOperator,
    TTVector,
    compression_ratio,
    load_tt,
    maxvol,
    save_tt,
    storage_size,
    tt_add,
    tt_apply,
    tt_cross,
    tt_diag_operator,
    tt_dot,
    tt_from_separable,
    tt_full,
    tt_hadamard,
    tt_identity_operator,
    tt_norm,
    tt_op_add,
    tt_op_compose,
    tt_op_full,
    tt_op_round,
    tt_op_scale,
    tt_random,
    tt_rank_one,
    tt_round,
    tt_scale,
    tt_svd,
)


def random_low_rank(rng, modes, rank):
    """Sum of `rank` random separable terms: dense array plus its exact train."""
    terms = [
        (1.0, [rng.standard_normal(n) for n in modes]) for _ in range(rank)
    ]
    tt = tt_from_separable(terms)
    dense = np.zeros(modes)
    for s, fs in terms:
        outer = fs[0]
        for f in fs[1:]:
            outer = np.multiply.outer(outer, f)
        dense += s * outer
    return dense, tt


class TestSvdAndFull:
    def test_rank_one_exact(self):
        rng = np.random.default_rng(0)
        dense, _ = random_low_rank(rng, (4, 5, 6), 1)
        tt = tt_svd(dense, 1e-13)
        assert tt.ranks == (1, 1, 1, 1)
        np.testing.assert_allclose(tt_full(tt), dense, atol=1e-12)

    def test_matrix_case_matches_matrix_rank(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((9, 3)) @ rng.standard_normal((3, 7))
        tt = tt_svd(a, 1e-10)
        assert tt.ranks[1] == np.linalg.matrix_rank(a)

    def test_error_bound_random_4d(self):
        rng = np.random.default_rng(2)
        dense = rng.standard_normal((8, 8, 8, 8))
        tol = 1e-10
        tt = tt_svd(dense, tol)
        err = np.linalg.norm(tt_full(tt) - dense)
        assert err <= tol * np.sqrt(3) * np.linalg.norm(dense)

    def test_truncation_bound_many_random(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            d = int(rng.integers(3, 5))
            modes = tuple(int(rng.integers(3, 7)) for _ in range(d))
            dense = rng.standard_normal(modes)
            tol = 10.0 ** rng.uniform(-8, -1)
            tt = tt_svd(dense, tol)
            err = np.linalg.norm(tt_full(tt) - dense)
            assert err <= tol * np.sqrt(d - 1) * np.linalg.norm(dense) + 1e-14

    def test_negative_tol_rejected(self):
        with pytest.raises(ValueError):
            tt_svd(np.zeros((2, 2)), -1.0)

    def test_full_cap(self):
        v = tt_rank_one([np.ones(50)] * 6)
        with pytest.raises(CapExceededError):
            tt_full(v, cap=10**6)

    def test_roundtrip(self):
        rng = np.random.default_rng(4)
        dense = rng.standard_normal((5, 4, 6, 3))
        tt = tt_svd(dense, 0.0)
        np.testing.assert_allclose(tt_full(tt), dense, atol=1e-12)


class TestRounding:
    def test_rank_one_unchanged(self):
        v = tt_rank_one([np.arange(1.0, 4), np.arange(2.0, 7)])
        r = tt_round(v, 1e-12)
        assert r.ranks == (1, 1, 1)
        np.testing.assert_allclose(tt_full(r), tt_full(v), atol=1e-13)

    def test_doubled_ranks_recompress(self):
        rng = np.random.default_rng(5)
        _, v = random_low_rank(rng, (5, 6, 7), 3)
        w = tt_add(v, v)
        assert max(w.ranks) == 6
        r = tt_round(w, 1e-12)
        assert r.ranks == v.ranks
        np.testing.assert_allclose(tt_full(r), 2 * tt_full(v), atol=1e-11)

    def test_perturbation_removed(self):
        rng = np.random.default_rng(6)
        modes = (5, 5, 5, 5, 5, 5)
        _, base = random_low_rank(rng, modes, 5)
        base = tt_scale(base, 1.0 / tt_norm(base))
        _, noise = random_low_rank(rng, modes, 5)
        noise = tt_scale(noise, 1e-9 / tt_norm(noise))
        v = tt_add(base, noise)
        assert max(v.ranks) == 10
        r = tt_round(v, 1e-6)
        assert max(r.ranks) == 5
        err = tt_norm(tt_add(r, tt_scale(base, -1.0)))
        assert err <= 1e-6 * tt_norm(base)

    def test_rounding_contract_random(self):
        rng = np.random.default_rng(7)
        for tol in (1e-2, 1e-5, 1e-9):
            v = tt_random((6, 5, 7, 4), 8, rng)
            r = tt_round(v, tol)
            err = np.linalg.norm(tt_full(r) - tt_full(v))
            assert err <= tol * tt_norm(v) + 1e-14
            assert all(ra <= rb for ra, rb in zip(r.ranks, v.ranks))


class TestArithmetic:
    def test_dot_of_ones(self):
        m, d = 4, 5
        v = tt_rank_one([np.ones(m)] * d)
        assert tt_dot(v, v) == pytest.approx(float(m**d), rel=1e-14)

    def test_add_cancel(self):
        rng = np.random.default_rng(8)
        v = tt_random((4, 5, 6), 3, rng, norm=2.5)
        z = tt_add(v, tt_scale(v, -1.0))
        assert tt_norm(z) <= 1e-12 * tt_norm(v)

    def test_add_linearity_dense(self):
        rng = np.random.default_rng(9)
        a = tt_random((3, 4, 5), 2, rng)
        b = tt_random((3, 4, 5), 3, rng)
        np.testing.assert_allclose(
            tt_full(tt_add(a, b)), tt_full(a) + tt_full(b), atol=1e-13
        )

    def test_hadamard_dense(self):
        rng = np.random.default_rng(10)
        _, a = random_low_rank(rng, (5, 4, 6), 2)
        _, b = random_low_rank(rng, (5, 4, 6), 3)
        got = tt_full(tt_hadamard(a, b))
        want = tt_full(a) * tt_full(b)
        assert np.abs(got - want).max() <= 1e-12 * np.abs(want).max()

    def test_norm_matches_dense(self):
        rng = np.random.default_rng(11)
        v = tt_random((5, 6, 4, 3), 4, rng, norm=3.0)
        assert tt_norm(v) == pytest.approx(np.linalg.norm(tt_full(v)), rel=1e-12)

    def test_shape_mismatch(self):
        a = tt_rank_one([np.ones(3), np.ones(4)])
        b = tt_rank_one([np.ones(3), np.ones(5)])
        for op in (tt_add, tt_hadamard, tt_dot):
            with pytest.raises(ShapeError):
                op(a, b)


class TestApply:
    def test_identity(self):
        rng = np.random.default_rng(12)
        v = tt_random((4, 5, 6), 3, rng)
        w = tt_apply(tt_identity_operator((4, 5, 6)), v)
        np.testing.assert_allclose(tt_full(w), tt_full(v), atol=1e-13)

    def test_dense_equivalence_2d(self):
        rng = np.random.default_rng(13)
        a1 = rng.standard_normal((1, 4, 4, 2))
        a2 = rng.standard_normal((2, 5, 5, 1))
        op = TTOperator([a1, a2])
        v = tt_random((4, 5), 3, rng)
        got = tt_full(tt_apply(op, v)).ravel()
        want = tt_op_full(op) @ tt_full(v).ravel()
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_diag_operator_equals_hadamard(self):
        rng = np.random.default_rng(14)
        _, coeff = random_low_rank(rng, (4, 5, 3), 2)
        v = tt_random((4, 5, 3), 3, rng)
        got = tt_full(tt_apply(tt_diag_operator(coeff), v))
        want = tt_full(tt_hadamard(coeff, v))
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_apply_rank_product(self):
        rng = np.random.default_rng(15)
        v = tt_random((4, 4, 4), 3, rng)
        _, coeff = random_low_rank(rng, (4, 4, 4), 2)
        op = tt_diag_operator(coeff)
        w = tt_apply(op, v)
        assert w.ranks == tuple(a * b for a, b in zip(op.ranks, v.ranks))

    def test_mode_mismatch(self):
        v = tt_rank_one([np.ones(3), np.ones(3)])
        with pytest.raises(ShapeError):
            tt_apply(tt_identity_operator((3, 4)), v)


class TestOperatorAlgebra:
    def test_op_add_and_scale_dense(self):
        rng = np.random.default_rng(16)
        _, c1 = random_low_rank(rng, (3, 4, 5), 2)
        _, c2 = random_low_rank(rng, (3, 4, 5), 2)
        o1, o2 = tt_diag_operator(c1), tt_diag_operator(c2)
        got = tt_op_full(tt_op_add(o1, tt_op_scale(o2, -2.0)))
        want = tt_op_full(o1) - 2.0 * tt_op_full(o2)
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_op_compose_dense(self):
        rng = np.random.default_rng(17)
        _, c1 = random_low_rank(rng, (3, 4), 2)
        o1 = tt_diag_operator(c1)
        a1 = rng.standard_normal((1, 3, 3, 2))
        a2 = rng.standard_normal((2, 4, 4, 1))
        o2 = TTOperator([a1, a2])
        got = tt_op_full(tt_op_compose(o1, o2))
        want = tt_op_full(o1) @ tt_op_full(o2)
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_op_round(self):
        rng = np.random.default_rng(18)
        _, c = random_low_rank(rng, (3, 4, 5), 2)
        o = tt_diag_operator(c)
        doubled = tt_op_add(o, o)
        r = tt_op_round(doubled, 1e-12)
        assert max(r.ranks) <= max(o.ranks)
        np.testing.assert_allclose(
            tt_op_full(r), 2 * tt_op_full(o), atol=1e-11
        )


class TestSeparable:
    def test_single_term_rank_one(self):
        v = tt_from_separable([(2.0, [np.ones(3), np.arange(4.0)])])
        assert v.ranks == (1, 1, 1)
        np.testing.assert_allclose(
            tt_full(v), 2.0 * np.multiply.outer(np.ones(3), np.arange(4.0))
        )

    def test_two_orthogonal_terms_rank_two(self):
        e1, e2 = np.eye(4)[0], np.eye(4)[1]
        v = tt_from_separable([(1.0, [e1, e1, e1]), (1.0, [e2, e2, e2])])
        assert v.ranks == (1, 2, 2, 1)
        dense = tt_full(v)
        # unfolding ranks are exactly 2
        assert np.linalg.matrix_rank(dense.reshape(4, 16)) == 2

    def test_product_of_mixed_frequencies_is_rank_one(self):
        # a pure per-dimension product stays rank 1 however wiggly the factors
        x = np.linspace(-1, 1, 12)
        f = np.sin(np.pi * x) + 0.3 * np.sin(80 * np.pi * x)
        v = tt_from_separable([(1.0, [f] * 6)])
        assert max(v.ranks) == 1

    def test_factor_length_mismatch(self):
        with pytest.raises(ShapeError):
            tt_from_separable([(1.0, [np.ones(3)]), (1.0, [np.ones(4)])])


class TestCompression:
    def test_rank_one_count(self):
        v = tt_rank_one([np.ones(10)] * 6)
        assert storage_size(v) == 60
        assert compression_ratio(v) == pytest.approx(6e-5)

    def test_reported_storage_formula(self):
        rng = np.random.default_rng(19)
        v = tt_random((6, 7, 8), 3, rng)
        want = sum(
            v.ranks[l] * v.mode_sizes[l] * v.ranks[l + 1] for l in range(v.ndim)
        )
        assert storage_size(v) == want

    def test_reference_configuration(self):
        # 7 modes of size 300 at internal rank 9: ratio is O(1e-12)
        cores = [np.zeros((1, 300, 9))]
        cores += [np.zeros((9, 300, 9)) for _ in range(5)]
        cores += [np.zeros((9, 300, 1))]
        v = TTVector(cores)
        ratio = compression_ratio(v)
        assert ratio == pytest.approx((7 * 81 * 300) / 300.0**7, rel=0.08)
        assert 1e-13 < ratio < 1e-11

    def test_full_rank_matrix_ratio(self):
        rng = np.random.default_rng(20)
        a = rng.standard_normal((6, 6))
        v = tt_svd(a, 0.0)
        assert compression_ratio(v) >= 1.0


class TestMaxvol:
    def test_square_returns_all_rows(self):
        rng = np.random.default_rng(21)
        m = rng.standard_normal((5, 5))
        np.testing.assert_array_equal(maxvol(m), np.arange(5))

    def test_identity_over_zeros(self):
        m = np.vstack([np.eye(4), np.zeros((6, 4))])
        assert sorted(maxvol(m)) == [0, 1, 2, 3]

    def test_dominance_bound(self):
        rng = np.random.default_rng(22)
        m = rng.standard_normal((50, 5))
        idx = maxvol(m)
        b = m @ np.linalg.inv(m[idx])
        assert np.abs(b).max() <= 1.0 + 1e-2 + 1e-12

    def test_rank_deficient_rejected(self):
        from ttss.errors import NumericalRankError

        m = np.ones((8, 3))
        with pytest.raises(NumericalRankError):
            maxvol(m)


class TestCross:
    def test_separable_product(self):
        rng = np.random.default_rng(23)
        factors = [rng.uniform(0.5, 1.5, n) for n in (6, 5, 7, 4)]

        def oracle(idx):
            out = np.ones(idx.shape[0])
            for l, f in enumerate(factors):
                out *= f[idx[:, l]]
            return out

        tt = tt_cross(oracle, (6, 5, 7, 4), tol=1e-12, max_rank=4, seed=1)
        dense = tt_full(tt)
        want = np.multiply.outer(
            np.multiply.outer(factors[0], factors[1]),
            np.multiply.outer(factors[2], factors[3]),
        )
        assert np.abs(dense - want).max() <= 1e-10 * np.abs(want).max()

    def test_sum_of_two_separable(self):
        rng = np.random.default_rng(24)
        modes = (5, 6, 4)
        dense, _ = random_low_rank(rng, modes, 2)

        def oracle(idx):
            return dense[idx[:, 0], idx[:, 1], idx[:, 2]]

        tt, info = tt_cross(oracle, modes, tol=1e-10, max_rank=6, seed=2,
                            return_info=True)
        assert info["converged"]
        assert max(tt.ranks) <= 4
        assert np.abs(tt_full(tt) - dense).max() <= 1e-8 * np.abs(dense).max()

    def test_budget_exhaustion_warns(self):
        rng = np.random.default_rng(25)
        dense = rng.standard_normal((6, 6, 6))  # full-rank noise

        def oracle(idx):
            return dense[idx[:, 0], idx[:, 1], idx[:, 2]]

        with pytest.warns(CrossConvergenceWarning):
            tt, info = tt_cross(oracle, (6, 6, 6), tol=1e-12, max_rank=2,
                                seed=3, return_info=True)
        assert not info["converged"]
        assert info["sample_error"] > 1e-12

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(26)
        dense, _ = random_low_rank(rng, (5, 5, 5), 3)

        def oracle(idx):
            return dense[idx[:, 0], idx[:, 1], idx[:, 2]]

        a = tt_cross(oracle, (5, 5, 5), tol=1e-10, max_rank=5, seed=7)
        b = tt_cross(oracle, (5, 5, 5), tol=1e-10, max_rank=5, seed=7)
        for ca, cb in zip(a.cores, b.cores):
            np.testing.assert_array_equal(ca, cb)


class TestSerialization:
    def test_vector_roundtrip(self):
        rng = np.random.default_rng(27)
        v = tt_random((4, 6, 5), 3, rng, norm=2.0)
        buf = io.BytesIO()
        save_tt(v, buf)
        buf.seek(0)
        w = load_tt(buf)
        assert isinstance(w, TTVector)
        assert w.mode_sizes == v.mode_sizes and w.ranks == v.ranks
        for ca, cb in zip(v.cores, w.cores):
            np.testing.assert_array_equal(ca, cb)

    def test_operator_roundtrip(self, tmp_path):
        rng = np.random.default_rng(28)
        _, c = random_low_rank(rng, (3, 4), 2)
        op = tt_diag_operator(c)
        path = tmp_path / "op.tts2"
        save_tt(op, path)
        w = load_tt(path)
        assert isinstance(w, TTOperator)
        np.testing.assert_allclose(tt_op_full(w), tt_op_full(op), atol=0)

    def test_magic_header(self, tmp_path):
        path = tmp_path / "v.tts2"
        save_tt(tt_rank_one([np.ones(2)] * 2), path)
        assert path.read_bytes()[:4] == b"TTS2"
        with pytest.raises(ValueError):
            load_tt(io.BytesIO(b"NOPE" + b"\x00" * 32))
