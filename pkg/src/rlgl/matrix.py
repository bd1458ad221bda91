"""Sparse row-stochastic matrices, builders, and the exact small-chain solver.

Every matrix class in the package implements the same informal interface
used by the iteration engine and the reference solvers:

- ``n``                 number of states
- ``out_degree``        float vector of per-node volume weights d_i; moving
                        the cash of node i is charged d_i edge operations
- ``volume``            sum of out_degree (the cost of one full sweep)
- ``row(i)``            pair ``(cols, vals)`` of the stored row i
- ``mul_left(x)``       the vector-matrix product x @ P
- ``scatter_add(C, nodes, amounts)``
                        in-place ``C += sum_k amounts[k] * row(nodes[k])``
- ``to_dense()``        dense ndarray copy (bounded by DENSE_CAP states)

Matrices are immutable after construction and safe to share between
concurrent solver runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DanglingNodeError,
    InvalidDampingError,
    InvalidIndexError,
    InvalidM0Error,
    InvalidParamsError,
    NotErgodicError,
)

# Dense representations (GTH elimination, Dobrushin scans, cycle products)
# are only allowed up to this size.
DENSE_CAP = 2000

ROW_SUM_TOL = 1e-12


def check_distribution(v, tol=1e-10):
    """Validate that ``v`` is a probability vector; returns it as float64."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise InvalidM0Error("distribution must be a 1-d vector")
    if np.any(v < 0):
        raise InvalidM0Error("distribution has negative entries")
    if abs(v.sum() - 1.0) > tol:
        raise InvalidM0Error(f"distribution sums to {v.sum()!r}, not 1")
    return v


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """CSR row-stochastic matrix.

    ``out_degree[i]`` is the number of stored entries of row i (the volume
    weight of node i for cost accounting).
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    out_degree: np.ndarray

    @property
    def volume(self):
        return float(self.out_degree.sum())

    @property
    def nnz(self):
        return int(self.indices.size)

    def row(self, i):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def row_sums(self):
        lens = np.diff(self.indptr)
        out = np.zeros(self.n)
        np.add.at(out, np.repeat(np.arange(self.n), lens), self.data)
        return out

    def mul_left(self, x):
        x = np.asarray(x, dtype=float)
        lens = np.diff(self.indptr)
        contrib = self.data * np.repeat(x, lens)
        return np.bincount(self.indices, weights=contrib, minlength=self.n)

    def scatter_add(self, C, nodes, amounts):
        for i, a in zip(nodes, amounts):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            C[self.indices[lo:hi]] += a * self.data[lo:hi]

    def to_dense(self):
        if self.n > DENSE_CAP:
            raise InvalidParamsError(f"dense form capped at n={DENSE_CAP}")
        D = np.zeros((self.n, self.n))
        for i in range(self.n):
            cols, vals = self.row(i)
            D[i, cols] = vals
        return D


def _coalesce_edges(edges, n):
    """Sort, bounds-check and merge duplicate (src, dst) pairs.

    Returns (src, dst, w) arrays of distinct positive-weight edges.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.size == 0:
        return (np.empty(0, dtype=np.int64),) * 2 + (np.empty(0),)
    if edges.ndim != 2 or edges.shape[1] not in (2, 3):
        raise InvalidParamsError("edge list must have shape (m, 2) or (m, 3)")
    src = edges[:, 0].astype(np.int64)
    dst = edges[:, 1].astype(np.int64)
    w = edges[:, 2].copy() if edges.shape[1] == 3 else np.ones(len(src))
    if np.any(w < 0):
        raise InvalidParamsError("edge weights must be >= 0")
    if src.size and (src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n):
        raise InvalidIndexError(f"edge endpoint outside [0, {n})")
    keep = w > 0
    src, dst, w = src[keep], dst[keep], w[keep]
    order = np.lexsort((dst, src))
    src, dst, w = src[order], dst[order], w[order]
    if src.size:
        new = np.empty(src.size, dtype=bool)
        new[0] = True
        new[1:] = (src[1:] != src[:-1]) | (dst[1:] != dst[:-1])
        group = np.cumsum(new) - 1
        src, dst = src[new], dst[new]
        w = np.bincount(group, weights=w)
    return src, dst, w


def _csr_arrays(src, dst, w, n):
    counts = np.bincount(src, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, dst.copy(), w.copy(), counts


def build_transition(edges, n, dangling="error"):
    """Build a row-stochastic matrix from a weighted directed edge list.

    Outgoing weights of each node are normalized to sum to one.
    ``dangling`` controls rows without out-edges: ``"error"`` raises,
    ``"uniform"`` replaces them by the uniform distribution, ``"self"``
    adds a self-loop.
    """
    if n < 1:
        raise InvalidParamsError("n must be >= 1")
    src, dst, w = _coalesce_edges(edges, n)
    empty = np.setdiff1d(np.arange(n), src)
    if empty.size:
        if dangling == "error":
            raise DanglingNodeError(int(empty[0]))
        if dangling == "self":
            src = np.concatenate([src, empty])
            dst = np.concatenate([dst, empty])
            w = np.concatenate([w, np.ones(empty.size)])
        elif dangling == "uniform":
            src = np.concatenate([src, np.repeat(empty, n)])
            dst = np.concatenate([dst, np.tile(np.arange(n), empty.size)])
            w = np.concatenate([w, np.full(empty.size * n, 1.0)])
        else:
            raise InvalidParamsError(f"unknown dangling policy {dangling!r}")
        order = np.lexsort((dst, src))
        src, dst, w = src[order], dst[order], w[order]
    indptr, indices, vals, counts = _csr_arrays(src, dst, w, n)
    sums = np.bincount(src, weights=w, minlength=n)
    vals = vals / np.repeat(sums, counts)
    return TransitionMatrix(n, indptr, indices, vals, counts.astype(float))


def validate_stochastic(P, tol=ROW_SUM_TOL):
    """Report rows whose sum deviates from one by more than ``tol``.

    Returns a list of ``(row, row_sum)`` violations; empty means ok.
    """
    bad = []
    for i in range(P.n):
        _, vals = P.row(i)
        s = float(vals.sum())
        if abs(s - 1.0) > tol:
            bad.append((i, s))
    return bad


class GoogleMatrix:
    """Damped-with-restart matrix c*P + (1-c)*1s, rank-one part implicit.

    Dangling rows of the raw graph are replaced by the restart
    distribution ``s`` before damping, so those rows equal ``s`` exactly.
    The dense rows are never materialized; products use the raw sparse
    rows plus a restart-mass accumulator.
    """

    def __init__(self, n, indptr, indices, data, dangling, c, s):
        if not 0.0 < c < 1.0:
            raise InvalidDampingError(f"damping must lie in (0,1), got {c}")
        self.n = n
        self.indptr = indptr
        self.indices = indices
        self.data = data
        self.scaled = c * data
        self.dangling = dangling
        self.dangling_mask = np.zeros(n, dtype=bool)
        self.dangling_mask[dangling] = True
        self.c = c
        self.s = check_distribution(s)
        counts = np.diff(indptr).astype(float)
        counts[counts == 0] = 1.0
        self.out_degree = counts

    @property
    def volume(self):
        return float(self.out_degree.sum())

    def row(self, i):
        # Dense row: c * p_i + (1-c) * s, with dangling p_i := s.
        vals = (1.0 - self.c) * self.s.copy()
        if self.dangling_mask[i]:
            vals += self.c * self.s
        else:
            lo, hi = self.indptr[i], self.indptr[i + 1]
            vals[self.indices[lo:hi]] += self.scaled[lo:hi]
        return np.arange(self.n), vals

    def mul_left(self, x):
        x = np.asarray(x, dtype=float)
        lens = np.diff(self.indptr)
        contrib = self.scaled * np.repeat(x, lens)
        y = np.bincount(self.indices, weights=contrib, minlength=self.n)
        restart = (1.0 - self.c) * x.sum() + self.c * x[self.dangling].sum()
        return y + restart * self.s

    def scatter_add(self, C, nodes, amounts):
        restart = 0.0
        for i, a in zip(nodes, amounts):
            if self.dangling_mask[i]:
                restart += a
            else:
                lo, hi = self.indptr[i], self.indptr[i + 1]
                C[self.indices[lo:hi]] += a * self.scaled[lo:hi]
                restart += a * (1.0 - self.c)
        if restart != 0.0:
            C += restart * self.s

    def push_damped(self, C, k, amount):
        """Add amount * c * p_k to C (restart mass not re-injected).

        This is the residual push of the positive-cash PageRank solver:
        fraction (1-c) of the pushed amount leaves the residual system.
        """
        if self.dangling_mask[k]:
            C += (self.c * amount) * self.s
        else:
            lo, hi = self.indptr[k], self.indptr[k + 1]
            C[self.indices[lo:hi]] += amount * self.scaled[lo:hi]

    def to_dense(self):
        if self.n > DENSE_CAP:
            raise InvalidParamsError(f"dense form capped at n={DENSE_CAP}")
        D = np.tile((1.0 - self.c) * self.s, (self.n, 1))
        for i in range(self.n):
            if self.dangling_mask[i]:
                D[i] += self.c * self.s
            else:
                lo, hi = self.indptr[i], self.indptr[i + 1]
                D[i, self.indices[lo:hi]] += self.scaled[lo:hi]
        return D


def _raw_rows(P_or_edges, n=None):
    """Normalize input to raw CSR rows, tolerating dangling rows."""
    if isinstance(P_or_edges, TransitionMatrix):
        P = P_or_edges
        return P.n, P.indptr, P.indices, P.data, np.empty(0, dtype=np.int64)
    if n is None:
        raise InvalidParamsError("n is required when passing a raw edge list")
    src, dst, w = _coalesce_edges(P_or_edges, n)
    indptr, indices, vals, counts = _csr_arrays(src, dst, w, n)
    sums = np.bincount(src, weights=w, minlength=n)
    nonempty = counts > 0
    vals = vals / np.repeat(sums[nonempty], counts[nonempty])
    dangling = np.flatnonzero(~nonempty)
    return n, indptr, indices, vals, dangling


def google_matrix(P_or_edges, c, s=None, n=None):
    """Build the damped restart matrix for a graph or transition matrix."""
    n, indptr, indices, data, dangling = _raw_rows(P_or_edges, n)
    if s is None:
        s = np.full(n, 1.0 / n)
    return GoogleMatrix(n, indptr, indices, data, dangling, c, s)


def augment_pagerank(P_or_edges, c, s=None, n=None):
    """Extend an n-state chain with an auxiliary restart node 0.

    Row 0 is ``(c, (1-c)s)`` and row i>=1 is ``((1-c), c*p_i)``; the lower
    right block stores exactly the entries ``c * p_ij``.  Dangling raw rows
    are replaced by ``s`` before scaling.
    """
    if not 0.0 < c < 1.0:
        raise InvalidDampingError(f"damping must lie in (0,1), got {c}")
    n, indptr, indices, data, dangling = _raw_rows(P_or_edges, n)
    if s is None:
        s = np.full(n, 1.0 / n)
    s = check_distribution(s)

    rows_idx = [np.concatenate([[0], np.flatnonzero(s > 0) + 1])]
    rows_val = [np.concatenate([[c], (1.0 - c) * s[s > 0]])]
    dangling_mask = np.zeros(n, dtype=bool)
    dangling_mask[dangling] = True
    for i in range(n):
        if dangling_mask[i]:
            cols = np.flatnonzero(s > 0) + 1
            vals = c * s[s > 0]
        else:
            lo, hi = indptr[i], indptr[i + 1]
            cols = indices[lo:hi] + 1
            vals = c * data[lo:hi]
        rows_idx.append(np.concatenate([[0], cols]))
        rows_val.append(np.concatenate([[1.0 - c], vals]))

    lens = np.array([r.size for r in rows_idx], dtype=np.int64)
    new_indptr = np.zeros(n + 2, dtype=np.int64)
    np.cumsum(lens, out=new_indptr[1:])
    return TransitionMatrix(
        n + 1,
        new_indptr,
        np.concatenate(rows_idx).astype(np.int64),
        np.concatenate(rows_val),
        lens.astype(float),
    )


def gth_stationary(P):
    """Exact stationary distribution by subtraction-free elimination.

    Accepts a dense row-stochastic ndarray or any matrix object with
    ``to_dense``; sizes are capped at DENSE_CAP.  The elimination uses
    only additions, multiplications and divisions, so the result is
    accurate to machine precision on ergodic chains.
    """
    A = P if isinstance(P, np.ndarray) else P.to_dense()
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if n > DENSE_CAP:
        raise InvalidParamsError(f"exact solve capped at n={DENSE_CAP}")
    if n == 1:
        return np.array([1.0])
    for k in range(n - 1):
        scale = A[k, k + 1 :].sum()
        if scale <= 0.0:
            raise NotErgodicError(f"elimination pivot vanished at state {k}")
        A[k + 1 :, k] /= scale
        A[k + 1 :, k + 1 :] += np.outer(A[k + 1 :, k], A[k, k + 1 :])
    pi = np.zeros(n)
    pi[n - 1] = 1.0
    for k in range(n - 2, -1, -1):
        pi[k] = pi[k + 1 :] @ A[k + 1 :, k]
    return pi / pi.sum()
