"""Hot loops: alternating row/column search, exhaustive enumeration, ANOVA residuals.

Each kernel exists twice: a numba ``@njit`` version and a pure-numpy version
with the same semantics (stable top-k selection, lexicographic enumeration,
first-found wins on ties). The numba path is used when numba imports and the
environment variable ``SUBMAX_DISABLE_NUMBA`` is unset or falsy; otherwise the
numpy path is used. ``NUMBA_IMPLS`` and ``NUMPY_IMPLS`` expose both sets so the
benchmark and parity tests can call them side by side.

Numba kernels are compiled with ``nogil=True`` so thread pools in the calling
modules run them concurrently.
"""

from __future__ import annotations

import os
from itertools import combinations

import numpy as np

_FLAG = os.environ.get("SUBMAX_DISABLE_NUMBA", "").strip().lower()
NUMBA_DISABLED_BY_ENV = _FLAG not in ("", "0", "false", "no", "off")

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and not NUMBA_DISABLED_BY_ENV
BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# shared helpers (plain python; compiled below when numba is present)
# ---------------------------------------------------------------------------


def _same(a, b):
    for i in range(a.shape[0]):
        if a[i] != b[i]:
            return False
    return True


def _next_comb(c, n):
    # advance c to the next k-combination of range(n) in lexicographic order
    k = c.shape[0]
    i = k - 1
    while i >= 0 and c[i] == n - k + i:
        i -= 1
    if i < 0:
        return False
    c[i] += 1
    for j in range(i + 1, k):
        c[j] = c[j - 1] + 1
    return True


def _block_residual(W, rows, cols):
    k = rows.shape[0]
    l = cols.shape[0]
    rmean = np.zeros(k)
    cmean = np.zeros(l)
    grand = 0.0
    for a in range(k):
        for b in range(l):
            x = W[rows[a], cols[b]]
            rmean[a] += x
            cmean[b] += x
            grand += x
    for a in range(k):
        rmean[a] /= l
    for b in range(l):
        cmean[b] /= k
    grand /= k * l
    ss = 0.0
    for a in range(k):
        for b in range(l):
            e = W[rows[a], cols[b]] - rmean[a] - cmean[b] + grand
            ss += e * e
    return ss / ((k - 1) * (l - 1))


# ---------------------------------------------------------------------------
# alternating search
# ---------------------------------------------------------------------------


def _search_one(W, k, l, cols0, max_iters, trace):
    m, n = W.shape
    cols = np.sort(cols0)
    rows = np.empty(k, dtype=np.int64)
    best_rows = np.empty(k, dtype=np.int64)
    best_cols = cols.copy()
    best = -np.inf
    rsum = np.empty(m)
    csum = np.empty(n)
    for it in range(max_iters):
        for i in range(m):
            acc = 0.0
            for c in cols:
                acc += W[i, c]
            rsum[i] = acc
        rows = np.sort(np.argsort(-rsum, kind="mergesort")[:k])
        csum[:] = 0.0
        for i in rows:
            for j in range(n):
                csum[j] += W[i, j]
        new_cols = np.sort(np.argsort(-csum, kind="mergesort")[:l])
        total = 0.0
        for c in new_cols:
            total += csum[c]
        avg = total / (k * l)
        trace[it] = avg
        if avg > best:
            best = avg
            best_rows[:] = rows
            best_cols = new_cols.copy()
        if _same(new_cols, cols):
            return rows, cols, it + 1, True
        cols = new_cols
    return best_rows, best_cols, max_iters, False


def _search_batch(W, k, l, init_cols, max_iters):
    N = init_cols.shape[0]
    out_rows = np.empty((N, k), dtype=np.int64)
    out_cols = np.empty((N, l), dtype=np.int64)
    iters = np.empty(N, dtype=np.int64)
    conv = np.empty(N, dtype=np.bool_)
    trace = np.empty(max_iters)
    for r in range(N):
        rows, cols, it, ok = _search_one(W, k, l, init_cols[r], max_iters, trace)
        out_rows[r] = rows
        out_cols[r] = cols
        iters[r] = it
        conv[r] = ok
    return out_rows, out_cols, iters, conv


def _np_search_one(W, k, l, cols0, max_iters, trace):
    cols = np.sort(np.asarray(cols0, dtype=np.int64))
    best = -np.inf
    best_rows = best_cols = None
    rows = None
    for it in range(max_iters):
        rsum = W[:, cols].sum(axis=1)
        rows = np.sort(np.argsort(-rsum, kind="stable")[:k])
        csum = W[rows].sum(axis=0)
        new_cols = np.sort(np.argsort(-csum, kind="stable")[:l])
        avg = csum[new_cols].sum() / (k * l)
        trace[it] = avg
        if avg > best:
            best, best_rows, best_cols = avg, rows, new_cols
        if np.array_equal(new_cols, cols):
            return rows, cols, it + 1, True
        cols = new_cols
    return best_rows, best_cols, max_iters, False


def _np_search_batch(W, k, l, init_cols, max_iters):
    N = init_cols.shape[0]
    out_rows = np.empty((N, k), dtype=np.int64)
    out_cols = np.empty((N, l), dtype=np.int64)
    iters = np.empty(N, dtype=np.int64)
    conv = np.empty(N, dtype=np.bool_)
    trace = np.empty(max_iters)
    for r in range(N):
        rows, cols, it, ok = _np_search_one(W, k, l, init_cols[r], max_iters, trace)
        out_rows[r], out_cols[r], iters[r], conv[r] = rows, cols, it, ok
    return out_rows, out_cols, iters, conv


# ---------------------------------------------------------------------------
# exhaustive enumeration
# ---------------------------------------------------------------------------


def _exhaustive_max_sum(W, k, l):
    m, n = W.shape
    rows = np.arange(k)
    best = -np.inf
    best_rows = rows.copy()
    best_cols = np.arange(l)
    colsum = np.empty(n)
    cols = np.arange(l)
    while True:
        colsum[:] = 0.0
        for i in rows:
            for j in range(n):
                colsum[j] += W[i, j]
        for j in range(l):
            cols[j] = j
        while True:
            total = 0.0
            for c in cols:
                total += colsum[c]
            if total > best:
                best = total
                best_rows[:] = rows
                best_cols[:] = cols
            if not _next_comb(cols, n):
                break
        if not _next_comb(rows, m):
            break
    return best_rows, best_cols, best


def _exhaustive_min_anova(W, k, l):
    m, n = W.shape
    rows = np.arange(k)
    best = np.inf
    best_rows = rows.copy()
    best_cols = np.arange(l)
    cols = np.arange(l)
    while True:
        for j in range(l):
            cols[j] = j
        while True:
            g = _block_residual(W, rows, cols)
            if g < best:
                best = g
                best_rows[:] = rows
                best_cols[:] = cols
            if not _next_comb(cols, n):
                break
        if not _next_comb(rows, m):
            break
    return best_rows, best_cols, best


def _combos(n, k):
    return np.array(list(combinations(range(n), k)), dtype=np.int64).reshape(-1, k)


def _chunk(n_cols_combos):
    return max(1, 1_000_000 // max(1, n_cols_combos))


def _np_exhaustive_max_sum(W, k, l):
    m, n = W.shape
    row_c = _combos(m, k)
    col_c = _combos(n, l)
    best = -np.inf
    best_at = (0, 0)
    step = _chunk(len(col_c))
    for start in range(0, len(row_c), step):
        block = row_c[start:start + step]
        colsum = W[block].sum(axis=1)                  # (chunk, n)
        scores = colsum[:, col_c].sum(axis=2)          # (chunk, C(n,l))
        flat = int(np.argmax(scores))
        a, b = divmod(flat, scores.shape[1])
        if scores[a, b] > best:
            best = float(scores[a, b])
            best_at = (start + a, b)
    return row_c[best_at[0]], col_c[best_at[1]], best


def _np_anova_batch(blocks):
    blocks = np.asarray(blocks, dtype=np.float64)
    _, k, l = blocks.shape
    rmean = blocks.mean(axis=2, keepdims=True)
    cmean = blocks.mean(axis=1, keepdims=True)
    grand = blocks.mean(axis=(1, 2), keepdims=True)
    resid = blocks - rmean - cmean + grand
    return (resid ** 2).sum(axis=(1, 2)) / ((k - 1) * (l - 1))


def _np_exhaustive_min_anova(W, k, l):
    m, n = W.shape
    row_c = _combos(m, k)
    col_c = _combos(n, l)
    best = np.inf
    best_at = (0, 0)
    for a, rows in enumerate(row_c):
        sub = W[rows]                                  # (k, n)
        blocks = np.transpose(sub[:, col_c], (1, 0, 2))  # (C(n,l), k, l)
        g = _np_anova_batch(blocks)
        b = int(np.argmin(g))
        if g[b] < best:
            best = float(g[b])
            best_at = (a, b)
    return row_c[best_at[0]], col_c[best_at[1]], best


def _anova_batch(blocks):
    N, k, l = blocks.shape
    out = np.empty(N)
    rows = np.arange(k)
    cols = np.arange(l)
    for t in range(N):
        out[t] = _block_residual(blocks[t], rows, cols)
    return out


NUMPY_IMPLS = {
    "search_one": _np_search_one,
    "search_batch": _np_search_batch,
    "exhaustive_max_sum": _np_exhaustive_max_sum,
    "exhaustive_min_anova": _np_exhaustive_min_anova,
    "anova_batch": _np_anova_batch,
}

NUMBA_IMPLS = {}

if NUMBA_AVAILABLE:
    _jit = njit(cache=True, nogil=True)
    _same = _jit(_same)
    _next_comb = _jit(_next_comb)
    _block_residual = _jit(_block_residual)
    _search_one = _jit(_search_one)
    _search_batch = _jit(_search_batch)
    _exhaustive_max_sum = _jit(_exhaustive_max_sum)
    _exhaustive_min_anova = _jit(_exhaustive_min_anova)
    _anova_batch = _jit(_anova_batch)
    NUMBA_IMPLS = {
        "search_one": _search_one,
        "search_batch": _search_batch,
        "exhaustive_max_sum": _exhaustive_max_sum,
        "exhaustive_min_anova": _exhaustive_min_anova,
        "anova_batch": _anova_batch,
    }

_ACTIVE = NUMBA_IMPLS if USE_NUMBA else NUMPY_IMPLS


def _as_matrix(W):
    return np.ascontiguousarray(W, dtype=np.float64)


def search_one(W, k, l, cols0, max_iters, trace):
    """Run one alternation from ``cols0``; fills ``trace`` with per-step averages.

    Returns ``(rows, cols, iterations, converged)``. When ``max_iters`` is hit
    without a repeated (rows, cols) pair, the best pair seen is returned with
    ``converged=False``.
    """
    return _ACTIVE["search_one"](_as_matrix(W), int(k), int(l),
                                 np.asarray(cols0, dtype=np.int64), int(max_iters), trace)


def search_batch(W, k, l, init_cols, max_iters):
    return _ACTIVE["search_batch"](_as_matrix(W), int(k), int(l),
                                   np.ascontiguousarray(init_cols, dtype=np.int64), int(max_iters))


def exhaustive_max_sum(W, k, l):
    """Lexicographically first (rows, cols) maximizing the block sum."""
    return _ACTIVE["exhaustive_max_sum"](_as_matrix(W), int(k), int(l))


def exhaustive_min_anova(W, k, l):
    """Lexicographically first (rows, cols) minimizing the ANOVA residual."""
    return _ACTIVE["exhaustive_min_anova"](_as_matrix(W), int(k), int(l))


def anova_batch(blocks):
    """ANOVA mean squared residual of each block in an (N, k, l) stack."""
    return _ACTIVE["anova_batch"](np.ascontiguousarray(blocks, dtype=np.float64))
