"""Alternating row/column search for large-average submatrices, plus exhaustive oracles."""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .core import DataMatrix, SubmatrixIndex, anova_residual, submatrix_average
from .errors import BudgetError, InvalidArgumentError
from .rng import check_seed, generator, split

DEFAULT_BUDGET = 10 ** 8
DEFAULT_MAX_ITERS = 1000


@dataclass(frozen=True)
class SearchConfig:
    k: int
    l: int
    restarts: int = 1
    master_seed: int = 0
    max_iters: int = DEFAULT_MAX_ITERS

    def __post_init__(self):
        for name in ("k", "l", "restarts", "max_iters"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise InvalidArgumentError(f"{name} must be a positive integer, got {v!r}")
        check_seed(self.master_seed)

    def check(self, W: DataMatrix) -> None:
        _check_shape(W, self.k, self.l)


class SearchRun(NamedTuple):
    index: SubmatrixIndex
    average: float
    iterations: int
    converged: bool
    trace: tuple[float, ...] = ()


@dataclass
class SearchResult:
    best_index: SubmatrixIndex
    best_average: float
    restarts_run: int
    iterations_histogram: dict[int, int] = field(default_factory=dict)
    non_converged: int = 0

    def to_dict(self) -> dict:
        return {
            "rows": list(self.best_index.row_ids),
            "cols": list(self.best_index.col_ids),
            "average": self.best_average,
            "restarts": self.restarts_run,
            "iterations_histogram": {str(k): v for k, v in sorted(self.iterations_histogram.items())},
            "non_converged": self.non_converged,
        }


def _check_shape(W, k, l):
    if not 1 <= k <= W.rows:
        raise InvalidArgumentError(f"k must lie in [1, {W.rows}], got {k}")
    if not 1 <= l <= W.cols:
        raise InvalidArgumentError(f"l must lie in [1, {W.cols}], got {l}")


def initial_columns(n: int, l: int, seed: int) -> np.ndarray:
    """Uniformly random l-subset of range(n) (without replacement) drawn from ``seed``."""
    return np.sort(generator(seed).choice(n, size=l, replace=False))


def alternating_search_once(W: DataMatrix, k: int, l: int, seed: int,
                            max_iters: int = DEFAULT_MAX_ITERS) -> SearchRun:
    """One run of the alternating update from a random column subset.

    Rows are set to the k largest row sums over the current columns, then
    columns to the l largest column sums over those rows (ties go to the
    lower index), until the column set stops changing. If that does not
    happen within ``max_iters`` the best pair seen is returned with
    ``converged=False``.
    """
    _check_shape(W, k, l)
    trace = np.empty(max_iters)
    rows, cols, iters, ok = kernels.search_one(
        W.values, k, l, initial_columns(W.cols, l, seed), max_iters, trace)
    index = SubmatrixIndex(tuple(rows.tolist()), tuple(cols.tolist()))
    return SearchRun(index, submatrix_average(W, index), int(iters), bool(ok),
                     tuple(trace[:iters].tolist()))


def _restart_chunks(total, parts):
    parts = max(1, min(parts, total))
    bounds = np.linspace(0, total, parts + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def multi_restart_search(W: DataMatrix, cfg: SearchConfig, threads: int = 1) -> SearchResult:
    """Best fixed point over ``cfg.restarts`` alternating runs.

    Restart i starts from ``initial_columns(n, l, split(master_seed, i))``.
    Averages are recomputed exactly for every distinct fixed point and the
    winner is the largest average, ties to the lexicographically smallest
    (rows, cols), so the answer does not depend on ``threads``.
    """
    cfg.check(W)
    k, l, N = cfg.k, cfg.l, cfg.restarts
    init = np.empty((N, l), dtype=np.int64)
    for i in range(N):
        init[i] = initial_columns(W.cols, l, split(cfg.master_seed, i))

    chunks = _restart_chunks(N, threads)
    run = lambda ab: kernels.search_batch(W.values, k, l, init[ab[0]:ab[1]], cfg.max_iters)  # noqa: E731
    if len(chunks) == 1:
        parts = [run(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(run, chunks))
    rows = np.concatenate([p[0] for p in parts])
    cols = np.concatenate([p[1] for p in parts])
    iters = np.concatenate([p[2] for p in parts])
    conv = np.concatenate([p[3] for p in parts])

    averages: dict[tuple, float] = {}
    for r in range(N):
        key = (tuple(rows[r].tolist()), tuple(cols[r].tolist()))
        if key not in averages:
            averages[key] = submatrix_average(W, SubmatrixIndex(*key))
    best_key = min(averages, key=lambda kk: (-averages[kk], kk))
    return SearchResult(
        best_index=SubmatrixIndex(*best_key),
        best_average=averages[best_key],
        restarts_run=N,
        iterations_histogram=dict(Counter(iters.tolist())),
        non_converged=int((~conv).sum()),
    )


def candidate_count(W: DataMatrix, k: int, l: int) -> int:
    return math.comb(W.rows, k) * math.comb(W.cols, l)


def _check_budget(W, k, l, budget):
    need = candidate_count(W, k, l)
    if need > budget:
        raise BudgetError(
            f"exhaustive search over {k}x{l} blocks of a {W.rows}x{W.cols} matrix needs "
            f"{need} candidates, budget is {budget}", need, budget)


def exhaustive_max_average(W: DataMatrix, k: int, l: int,
                           budget: int = DEFAULT_BUDGET) -> tuple[SubmatrixIndex, float]:
    """Maximum-average k x l block by full enumeration (ties: lexicographically first)."""
    _check_shape(W, k, l)
    _check_budget(W, k, l, budget)
    rows, cols, _ = kernels.exhaustive_max_sum(W.values, k, l)
    index = SubmatrixIndex(tuple(rows.tolist()), tuple(cols.tolist()))
    return index, submatrix_average(W, index)


def exhaustive_min_anova(W: DataMatrix, k: int, l: int,
                         budget: int = DEFAULT_BUDGET) -> tuple[SubmatrixIndex, float]:
    """Minimum ANOVA residual k x l block by full enumeration (ties: lexicographically first)."""
    if k < 2 or l < 2:
        raise InvalidArgumentError(f"ANOVA search needs k, l >= 2, got {k}x{l}")
    _check_shape(W, k, l)
    _check_budget(W, k, l, budget)
    rows, cols, _ = kernels.exhaustive_min_anova(W.values, k, l)
    index = SubmatrixIndex(tuple(rows.tolist()), tuple(cols.tolist()))
    return index, anova_residual(W, index)


def max_k_statistic(W: DataMatrix, tau: float, mode: str = "average",
                    budget: int = DEFAULT_BUDGET) -> int:
    """Exact K_tau (average mode) or L_tau (anova mode) of W by enumeration.

    Average mode stops at the first k with no qualifying block: if a k x k
    block has mean >= tau, its best (k-1) x (k-1) sub-block does too, so
    no larger k can qualify. ANOVA mode has no such property and scans every
    k >= 2; it returns 1 when nothing qualifies.
    """
    top = min(W.rows, W.cols)
    if mode == "average":
        best = 0
        for k in range(1, top + 1):
            _, value = exhaustive_max_average(W, k, k, budget)
            if value < tau:
                break
            best = k
        return best
    if mode == "anova":
        best = 1
        for k in range(2, top + 1):
            _, value = exhaustive_min_anova(W, k, k, budget)
            if value <= tau:
                best = k
        return best
    raise InvalidArgumentError(f"mode must be 'average' or 'anova', got {mode!r}")
