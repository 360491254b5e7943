"""Tensor-train linear algebra.

TTVector holds a d-dimensional tensor as a chain of order-3 cores
(r_{l-1}, n_l, r_l) with boundary ranks 1; TTOperator holds a linear map as a
chain of order-4 cores (r_{l-1}, m_l, n_l, r_l).  Decomposition (tt_svd),
recompression (tt_round), exact arithmetic, cross interpolation driven by
maxvol row selection, and dense reconstruction for desk-scale checks all live
here, together with the "TTS2" binary container used for checkpoints.

Objects are treated as immutable values: every operation returns new cores.
"""

from __future__ import annotations

import io
import struct
import warnings

import numpy as np
import scipy.linalg

from .errors import (
    CapExceededError,
    CrossConvergenceWarning,
    NumericalRankError,
    ShapeError,
)

__all__ = [
    "TTVector",
    "TTOperator",
    "tt_svd",
    "tt_round",
    "tt_add",
    "tt_scale",
    "tt_hadamard",
    "tt_dot",
    "tt_norm",
    "tt_apply",
    "tt_from_separable",
    "tt_full",
    "tt_rank_one",
    "tt_random",
    "maxvol",
    "tt_cross",
    "compression_ratio",
    "storage_size",
    "tt_diag_operator",
    "tt_identity_operator",
    "tt_op_add",
    "tt_op_scale",
    "tt_op_compose",
    "tt_op_round",
    "tt_op_full",
    "save_tt",
    "load_tt",
    "DENSE_CAP",
]

DENSE_CAP = 10**8


class TTVector:
    """A d-dimensional tensor in train format (list of order-3 cores)."""

    def __init__(self, cores):
        cores = [np.asarray(c, dtype=float) for c in cores]
        if not cores:
            raise ShapeError("need at least one core")
        for c in cores:
            if c.ndim != 3:
                raise ShapeError("vector cores must have 3 axes")
        if cores[0].shape[0] != 1 or cores[-1].shape[-1] != 1:
            raise ShapeError("boundary ranks must be 1")
        for left, right in zip(cores[:-1], cores[1:]):
            if left.shape[-1] != right.shape[0]:
                raise ShapeError("adjacent core ranks do not match")
        self.cores = cores

    @property
    def ndim(self):
        return len(self.cores)

    @property
    def mode_sizes(self):
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self):
        return tuple([1] + [c.shape[-1] for c in self.cores])

    def __repr__(self):
        return f"TTVector(modes={self.mode_sizes}, ranks={self.ranks})"


class TTOperator:
    """A linear operator in train format (order-4 cores, row x column modes)."""

    def __init__(self, cores):
        cores = [np.asarray(c, dtype=float) for c in cores]
        if not cores:
            raise ShapeError("need at least one core")
        for c in cores:
            if c.ndim != 4:
                raise ShapeError("operator cores must have 4 axes")
        if cores[0].shape[0] != 1 or cores[-1].shape[-1] != 1:
            raise ShapeError("boundary ranks must be 1")
        for left, right in zip(cores[:-1], cores[1:]):
            if left.shape[-1] != right.shape[0]:
                raise ShapeError("adjacent core ranks do not match")
        self.cores = cores

    @property
    def ndim(self):
        return len(self.cores)

    @property
    def row_sizes(self):
        return tuple(c.shape[1] for c in self.cores)

    @property
    def col_sizes(self):
        return tuple(c.shape[2] for c in self.cores)

    @property
    def ranks(self):
        return tuple([1] + [c.shape[-1] for c in self.cores])

    def __repr__(self):
        return (
            f"TTOperator(rows={self.row_sizes}, cols={self.col_sizes}, "
            f"ranks={self.ranks})"
        )


def _check_entries(total, cap):
    if total > cap:
        raise CapExceededError(
            f"dense materialization of {total} entries exceeds cap {cap}"
        )


def _truncation_rank(s, delta, max_rank):
    """Smallest rank whose discarded singular-value tail is <= delta (Frobenius)."""
    if len(s) == 0:
        return 1
    tail = np.sqrt(np.cumsum(s[::-1] ** 2))[::-1]  # tail[k] = ||s[k:]||
    r = len(s)
    for k in range(len(s)):
        if tail[k] <= delta:
            r = k
            break
    return min(max(1, r), max_rank)


def tt_svd(dense, tol, max_rank=None):
    """Train decomposition of a dense array by sequential thin SVDs.

    The per-unfolding truncation threshold is tol * ||dense||_F / sqrt(d-1),
    which keeps the total reconstruction error within tol * ||dense||_F.
    """
    if tol < 0:
        raise ValueError("tolerance must be >= 0")
    a = np.asarray(dense, dtype=float)
    modes = a.shape
    d = a.ndim
    if d == 0:
        raise ShapeError("scalar input")
    max_rank = max_rank or 10**9
    norm = np.linalg.norm(a)
    delta = tol * norm / np.sqrt(max(d - 1, 1))
    cores = []
    c = a.reshape(1, -1)
    r_prev = 1
    for l in range(d - 1):
        c = c.reshape(r_prev * modes[l], -1)
        u, s, vt = np.linalg.svd(c, full_matrices=False)
        r = _truncation_rank(s, delta, max_rank)
        cores.append(u[:, :r].reshape(r_prev, modes[l], r))
        c = s[:r, None] * vt[:r]
        r_prev = r
    cores.append(c.reshape(r_prev, modes[-1], 1))
    return TTVector(cores)


def tt_full(v, cap=DENSE_CAP):
    """Dense reconstruction; refuses when the entry count exceeds the cap."""
    total = int(np.prod([float(n) for n in v.mode_sizes]))
    _check_entries(total, cap)
    out = v.cores[0].reshape(v.mode_sizes[0], -1)
    for c in v.cores[1:]:
        out = out.reshape(-1, c.shape[0]) @ c.reshape(c.shape[0], -1)
    return out.reshape(v.mode_sizes)


def tt_rank_one(factors, scale=1.0):
    """Rank-1 train from one vector per mode."""
    cores = [np.asarray(f, dtype=float).reshape(1, -1, 1) for f in factors]
    cores[0] = cores[0] * scale
    return TTVector(cores)


def tt_random(modes, rank, rng, norm=1.0):
    """Random train with uniform internal rank (seeded through rng)."""
    d = len(modes)
    ranks = [1] + [rank] * (d - 1) + [1]
    cores = [rng.standard_normal((ranks[l], modes[l], ranks[l + 1])) for l in range(d)]
    v = TTVector(cores)
    scale = tt_norm(v)
    if scale > 0:
        v = tt_scale(v, norm / scale)
    return v


def tt_from_separable(terms, modes=None):
    """Exact train of a sum of separable terms.

    Each term is (scale, [f_1, ..., f_d]) with f_l a vector of samples along
    mode l.  The result has all internal ranks equal to the number of terms.
    """
    if not terms:
        raise ShapeError("need at least one term")
    d = len(terms[0][1])
    if any(len(f) != d for _, f in terms):
        raise ShapeError("all terms must supply one factor per mode")
    t = len(terms)
    factors = [[np.asarray(f, dtype=float) for f in fs] for _, fs in terms]
    if modes is None:
        modes = tuple(len(f) for f in factors[0])
    for fs in factors:
        if tuple(len(f) for f in fs) != tuple(modes):
            raise ShapeError("factor lengths disagree across terms")
    scales = [float(s) for s, _ in terms]
    if d == 1:
        col = sum(s * f[0] for s, f in zip(scales, factors))
        return TTVector([col.reshape(1, -1, 1)])
    first = np.zeros((1, modes[0], t))
    for k in range(t):
        first[0, :, k] = scales[k] * factors[k][0]
    cores = [first]
    for l in range(1, d - 1):
        mid = np.zeros((t, modes[l], t))
        for k in range(t):
            mid[k, :, k] = factors[k][l]
        cores.append(mid)
    last = np.zeros((t, modes[-1], 1))
    for k in range(t):
        last[k, :, 0] = factors[k][-1]
    cores.append(last)
    return TTVector(cores)


def tt_add(a, b):
    """Exact sum; internal ranks add."""
    if a.mode_sizes != b.mode_sizes:
        raise ShapeError(f"mode mismatch {a.mode_sizes} vs {b.mode_sizes}")
    d = a.ndim
    if d == 1:
        return TTVector([a.cores[0] + b.cores[0]])
    cores = []
    for l in range(d):
        ca, cb = a.cores[l], b.cores[l]
        ra0, n, ra1 = ca.shape
        rb0, _, rb1 = cb.shape
        if l == 0:
            core = np.concatenate([ca, cb], axis=2)
        elif l == d - 1:
            core = np.concatenate([ca, cb], axis=0)
        else:
            core = np.zeros((ra0 + rb0, n, ra1 + rb1))
            core[:ra0, :, :ra1] = ca
            core[ra0:, :, ra1:] = cb
        cores.append(core)
    return TTVector(cores)


def tt_scale(a, s):
    cores = [c.copy() for c in a.cores]
    cores[0] = cores[0] * float(s)
    return TTVector(cores)


def tt_hadamard(a, b):
    """Elementwise product; internal ranks multiply."""
    if a.mode_sizes != b.mode_sizes:
        raise ShapeError(f"mode mismatch {a.mode_sizes} vs {b.mode_sizes}")
    cores = []
    for ca, cb in zip(a.cores, b.cores):
        core = np.einsum("anb,cnd->acnbd", ca, cb)
        r0 = ca.shape[0] * cb.shape[0]
        r1 = ca.shape[2] * cb.shape[2]
        cores.append(core.reshape(r0, ca.shape[1], r1))
    return TTVector(cores)


def tt_dot(a, b):
    """Full contraction <a, b>."""
    if a.mode_sizes != b.mode_sizes:
        raise ShapeError(f"mode mismatch {a.mode_sizes} vs {b.mode_sizes}")
    phi = np.ones((1, 1))  # (rank_a, rank_b)
    for ca, cb in zip(a.cores, b.cores):
        t = np.tensordot(phi, ca, axes=([0], [0]))  # (rb, n, ra1)
        phi = np.tensordot(t, cb, axes=([0, 1], [0, 1]))  # (ra1, rb1)
    return float(phi[0, 0])


def _right_orthogonalize(cores):
    """Make cores 1..d-1 right-orthogonal; the represented tensor is unchanged."""
    cores = [c.copy() for c in cores]
    for l in range(len(cores) - 1, 0, -1):
        r0, n, r1 = cores[l].shape
        q, r = np.linalg.qr(cores[l].reshape(r0, n * r1).T)
        rank = q.shape[1]
        cores[l] = q.T.reshape(rank, n, r1)
        cores[l - 1] = np.tensordot(cores[l - 1], r.T, axes=([2], [0]))
    return cores


def tt_norm(a):
    """Frobenius norm, computed through orthogonalization for stability."""
    if a.ndim == 1:
        return float(np.linalg.norm(a.cores[0]))
    cores = _right_orthogonalize(a.cores)
    return float(np.linalg.norm(cores[0]))


def tt_round(v, tol, max_rank=None):
    """Recompress to relative Frobenius accuracy tol; ranks never grow.

    Right-to-left orthogonalization followed by left-to-right SVD truncation
    with per-bond threshold tol * ||v||_F / sqrt(d-1).  `max_rank` is a hard
    cap used by iterative callers; when it binds, the tol contract no longer
    applies.
    """
    if tol < 0:
        raise ValueError("tolerance must be >= 0")
    d = v.ndim
    if d == 1:
        return TTVector([c.copy() for c in v.cores])
    max_rank = max_rank or 10**9
    cores = _right_orthogonalize(v.cores)
    norm = np.linalg.norm(cores[0])
    if norm == 0.0:
        return TTVector(
            [np.zeros((1, n, 1)) for n in v.mode_sizes]
        )
    delta = tol * norm / np.sqrt(d - 1)
    in_ranks = v.ranks
    for l in range(d - 1):
        r0, n, r1 = cores[l].shape
        u, s, vt = np.linalg.svd(cores[l].reshape(r0 * n, r1), full_matrices=False)
        r = _truncation_rank(s, delta, min(max_rank, in_ranks[l + 1]))
        cores[l] = u[:, :r].reshape(r0, n, r)
        carry = s[:r, None] * vt[:r]
        cores[l + 1] = np.tensordot(carry, cores[l + 1], axes=([1], [0]))
    return TTVector(cores)


def tt_apply(op, v):
    """Apply a train operator to a train vector; bond ranks multiply."""
    if op.col_sizes != v.mode_sizes:
        raise ShapeError(f"operator columns {op.col_sizes} vs vector {v.mode_sizes}")
    cores = []
    for co, cv in zip(op.cores, v.cores):
        core = np.einsum("amnb,cnd->acmbd", co, cv)
        r0 = co.shape[0] * cv.shape[0]
        r1 = co.shape[3] * cv.shape[2]
        cores.append(core.reshape(r0, co.shape[1], r1))
    return TTVector(cores)


def storage_size(v):
    """Number of stored floats: sum over cores of r_{l-1} * n_l * r_l."""
    return int(sum(c.size for c in v.cores))


def compression_ratio(v):
    """Train storage divided by dense storage."""
    dense = float(np.prod([float(n) for n in v.mode_sizes]))
    return storage_size(v) / dense


# ---------------------------------------------------------------------------
# maxvol and cross interpolation
# ---------------------------------------------------------------------------


def maxvol(m, delta=1e-2, max_iters=200):
    """Row indices of a dominant square submatrix of a tall matrix.

    Iteratively swaps rows until every entry of m @ inv(m[idx]) is bounded by
    1 + delta in absolute value.  Requires full column rank.
    """
    m = np.asarray(m, dtype=float)
    rows, cols = m.shape
    if rows < cols:
        raise ShapeError("matrix must have at least as many rows as columns")
    if rows == cols:
        if np.linalg.matrix_rank(m) < cols:
            raise NumericalRankError("square input is singular")
        return np.arange(cols)
    lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
    diag = np.abs(np.diag(lu)[:cols])
    if diag.min() < 1e-12 * max(diag.max(), 1e-300):
        raise NumericalRankError("input is numerically rank deficient")
    perm = np.arange(rows)
    for i, p in enumerate(piv[:cols]):
        perm[i], perm[p] = perm[p], perm[i]
    idx = perm[:cols].copy()
    try:
        b = np.linalg.solve(m[idx].T, m.T).T
    except np.linalg.LinAlgError as exc:
        raise NumericalRankError("pivot submatrix is singular") from exc
    for _ in range(max_iters):
        i, j = np.unravel_index(np.argmax(np.abs(b)), b.shape)
        if abs(b[i, j]) <= 1.0 + delta:
            break
        ej = np.zeros(cols)
        ej[j] = 1.0
        b -= np.outer(b[:, j] / b[i, j], b[i, :] - ej)
        idx[j] = i
    return idx


def _sample_tt(v, idx):
    """Entries of a train at integer index rows of shape (k, d)."""
    out = np.ones((idx.shape[0], 1))
    for l, c in enumerate(v.cores):
        slices = c[:, idx[:, l], :]  # (r0, k, r1)
        out = np.einsum("ka,akb->kb", out, slices)
    return out[:, 0]


def tt_cross(oracle, modes, tol, max_rank, seed=0, max_sweeps=14,
             sample_size=2000, return_info=False):
    """Train interpolation of an entry oracle via alternating maxvol sweeps.

    `oracle` maps an integer index array of shape (k, d) to k tensor entries.
    Column index sets grow by 2 per sweep until a random-sample relative
    error reaches tol or max_rank binds; rank exhaustion warns and returns
    the best train found (with `return_info=True` also a status dict).
    """
    modes = tuple(int(n) for n in modes)
    d = len(modes)
    rng = np.random.default_rng(seed)
    if d == 1:
        idx = np.arange(modes[0]).reshape(-1, 1)
        core = np.asarray(oracle(idx), dtype=float).reshape(1, -1, 1)
        result = TTVector([core])
        return (result, {"converged": True, "sample_error": 0.0}) if return_info else result

    def random_right(count, l):
        axes = range(l + 1, d)
        return [tuple(int(rng.integers(modes[a])) for a in axes) for _ in range(count)]

    right_sets = [random_right(min(2, max_rank), l) for l in range(d - 1)] + [[()]]
    left_sets = [[()]] + [None] * (d - 1)

    sample_idx = np.column_stack([rng.integers(0, n, sample_size) for n in modes])
    sample_val = np.asarray(oracle(sample_idx), dtype=float)
    sample_norm = np.linalg.norm(sample_val)

    def eval_block(lset, l, rset):
        """Oracle values on lset x mode_l x rset, shape (|lset|, n_l, |rset|)."""
        nl = modes[l]
        idx = np.array(
            [li + (i,) + ri for li in lset for i in range(nl) for ri in rset],
            dtype=np.int64,
        )
        vals = np.asarray(oracle(idx), dtype=float)
        return vals.reshape(len(lset), nl, len(rset))

    def interp_core(mat):
        """Q @ inv(Q[maxvol rows]) and the chosen rows, tall-matrix input."""
        q, _ = np.linalg.qr(mat)
        try:
            rows = maxvol(q)
        except NumericalRankError:
            rows = np.arange(min(q.shape))
        core = np.linalg.solve(q[rows].T, q.T).T
        return core, rows

    best_err, best_cores = np.inf, None
    for sweep in range(max_sweeps):
        if sweep > 0:
            # enrichment first: +2 fresh random indices per right set; the
            # following forward pass then grows the left sets to match
            for l in range(d - 1):
                have = set(right_sets[l])
                space = int(np.prod([modes[a] for a in range(l + 1, d)]))
                target = min(len(have) + 2, max_rank, space)
                tries = 0
                while len(right_sets[l]) < target and tries < 50:
                    cand = random_right(1, l)[0]
                    tries += 1
                    if cand not in have:
                        right_sets[l].append(cand)
                        have.add(cand)
        # forward pass refreshes left sets and assembles interpolation cores
        cores = [None] * d
        for l in range(d - 1):
            block = eval_block(left_sets[l], l, right_sets[l])
            nle, nl, nr = block.shape
            core, rows = interp_core(block.reshape(nle * nl, nr))
            cores[l] = core.reshape(nle, nl, core.shape[1])
            expanded = [li + (i,) for li in left_sets[l] for i in range(nl)]
            left_sets[l + 1] = [expanded[r] for r in rows]
        cores[d - 1] = eval_block(left_sets[d - 1], d - 1, [()])
        tt = TTVector(cores)
        approx = _sample_tt(tt, sample_idx)
        err = np.linalg.norm(approx - sample_val)
        if sample_norm > 0:
            err /= sample_norm
        if err < best_err:
            best_err, best_cores = err, tt.cores
        if err <= tol:
            break
        # backward pass refreshes the right sets at the grown ranks
        for l in range(d - 1, 0, -1):
            block = eval_block(left_sets[l], l, right_sets[l])
            nle, nl, nr = block.shape
            _, rows = interp_core(block.reshape(nle, nl * nr).T)
            expanded = [(i,) + ri for i in range(nl) for ri in right_sets[l]]
            right_sets[l - 1] = [expanded[r] for r in rows]
    result = TTVector(best_cores)
    converged = bool(best_err <= tol)
    if not converged:
        warnings.warn(
            f"cross interpolation stopped at sampled error {best_err:.2e} "
            f"(tol {tol:.2e}, max_rank {max_rank})",
            CrossConvergenceWarning,
        )
    if return_info:
        return result, {"converged": converged, "sample_error": float(best_err)}
    return result


# ---------------------------------------------------------------------------
# operator helpers
# ---------------------------------------------------------------------------


def tt_diag_operator(v):
    """Diagonal operator carrying the entries of v on its diagonal."""
    cores = []
    for c in v.cores:
        r0, n, r1 = c.shape
        core = np.zeros((r0, n, n, r1))
        rng = np.arange(n)
        for a in range(r0):
            core[a, rng, rng, :] = c[a]
        cores.append(core)
    return TTOperator(cores)


def tt_identity_operator(modes):
    return TTOperator([np.eye(n).reshape(1, n, n, 1) for n in modes])


def tt_op_add(a, b):
    if a.row_sizes != b.row_sizes or a.col_sizes != b.col_sizes:
        raise ShapeError("operator shapes do not match")
    d = a.ndim
    if d == 1:
        return TTOperator([a.cores[0] + b.cores[0]])
    cores = []
    for l in range(d):
        ca, cb = a.cores[l], b.cores[l]
        ra0, m, n, ra1 = ca.shape
        rb0, _, _, rb1 = cb.shape
        if l == 0:
            core = np.concatenate([ca, cb], axis=3)
        elif l == d - 1:
            core = np.concatenate([ca, cb], axis=0)
        else:
            core = np.zeros((ra0 + rb0, m, n, ra1 + rb1))
            core[:ra0, :, :, :ra1] = ca
            core[ra0:, :, :, ra1:] = cb
        cores.append(core)
    return TTOperator(cores)


def tt_op_scale(a, s):
    cores = [c.copy() for c in a.cores]
    cores[0] = cores[0] * float(s)
    return TTOperator(cores)


def tt_op_compose(a, b):
    """Operator product a @ b (b acts first); bond ranks multiply."""
    if a.col_sizes != b.row_sizes:
        raise ShapeError("inner operator sizes do not match")
    cores = []
    for ca, cb in zip(a.cores, b.cores):
        core = np.einsum("amkb,cknd->acmnbd", ca, cb)
        r0 = ca.shape[0] * cb.shape[0]
        r1 = ca.shape[3] * cb.shape[3]
        cores.append(core.reshape(r0, ca.shape[1], cb.shape[2], r1))
    return TTOperator(cores)


def _op_to_vector(a):
    return TTVector(
        [c.reshape(c.shape[0], c.shape[1] * c.shape[2], c.shape[3]) for c in a.cores]
    )


def _vector_to_op(v, row_sizes, col_sizes):
    cores = [
        c.reshape(c.shape[0], m, n, c.shape[2])
        for c, m, n in zip(v.cores, row_sizes, col_sizes)
    ]
    return TTOperator(cores)


def tt_op_round(a, tol, max_rank=None):
    """Recompress an operator by rounding its merged-mode vector form."""
    v = tt_round(_op_to_vector(a), tol, max_rank=max_rank)
    return _vector_to_op(v, a.row_sizes, a.col_sizes)


def tt_op_full(a, cap=DENSE_CAP):
    """Dense matrix of the operator, shaped (prod of rows, prod of cols)."""
    rows = int(np.prod([float(m) for m in a.row_sizes]))
    cols = int(np.prod([float(n) for n in a.col_sizes]))
    _check_entries(rows * cols, cap)
    out = a.cores[0].reshape(a.row_sizes[0], a.col_sizes[0], -1)
    m_acc, n_acc = a.row_sizes[0], a.col_sizes[0]
    for c in a.cores[1:]:
        r0, m, n, r1 = c.shape
        out = np.tensordot(out, c, axes=([2], [0]))  # (Macc, Nacc, m, n, r1)
        out = out.transpose(0, 2, 1, 3, 4).reshape(m_acc * m, n_acc * n, r1)
        m_acc *= m
        n_acc *= n
    return out.reshape(m_acc, n_acc)


# ---------------------------------------------------------------------------
# "TTS2" binary container
# ---------------------------------------------------------------------------

_MAGIC = b"TTS2"
_VERSION = 1
_KIND_VECTOR = 1
_KIND_OPERATOR = 2


def save_tt(obj, path):
    """Serialize a TTVector or TTOperator to the TTS2 container.

    Layout (little-endian): magic "TTS2", version byte, kind byte, uint32 d,
    mode sizes (d uint32 for vectors, 2d uint32 row/col pairs for operators),
    d+1 uint32 ranks, then the cores as row-major float64 payloads.
    """
    is_op = isinstance(obj, TTOperator)
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<BB", _VERSION, _KIND_OPERATOR if is_op else _KIND_VECTOR))
    buf.write(struct.pack("<I", obj.ndim))
    if is_op:
        for m, n in zip(obj.row_sizes, obj.col_sizes):
            buf.write(struct.pack("<II", m, n))
    else:
        for n in obj.mode_sizes:
            buf.write(struct.pack("<I", n))
    for r in obj.ranks:
        buf.write(struct.pack("<I", r))
    for c in obj.cores:
        buf.write(np.ascontiguousarray(c, dtype="<f8").tobytes())
    data = buf.getvalue()
    if hasattr(path, "write"):
        path.write(data)
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def load_tt(path):
    """Read a TTS2 container back into a TTVector or TTOperator."""
    if hasattr(path, "read"):
        data = path.read()
    else:
        with open(path, "rb") as fh:
            data = fh.read()
    if data[:4] != _MAGIC:
        raise ValueError("not a TTS2 container")
    version, kind = struct.unpack_from("<BB", data, 4)
    if version != _VERSION:
        raise ValueError(f"unsupported container version {version}")
    (d,) = struct.unpack_from("<I", data, 6)
    off = 10
    if kind == _KIND_OPERATOR:
        sizes = struct.unpack_from(f"<{2 * d}I", data, off)
        off += 8 * d
        rows, cols = sizes[0::2], sizes[1::2]
    else:
        rows = struct.unpack_from(f"<{d}I", data, off)
        off += 4 * d
        cols = None
    ranks = struct.unpack_from(f"<{d + 1}I", data, off)
    off += 4 * (d + 1)
    cores = []
    for l in range(d):
        if kind == _KIND_OPERATOR:
            shape = (ranks[l], rows[l], cols[l], ranks[l + 1])
        else:
            shape = (ranks[l], rows[l], ranks[l + 1])
        count = int(np.prod(shape))
        core = np.frombuffer(data, dtype="<f8", count=count, offset=off)
        cores.append(core.reshape(shape).astype(float))
        off += 8 * count
    return TTOperator(cores) if kind == _KIND_OPERATOR else TTVector(cores)
