import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from submax.core import (
    DataMatrix,
    PlantedSignal,
    SubmatrixIndex,
    anova_residual,
    embed_signal,
    gaussian_matrix,
    submatrix_average,
)
from submax.errors import InvalidArgumentError


def test_datamatrix_copies_and_freezes():
    src = np.arange(6.0).reshape(2, 3)
    W = DataMatrix(src)
    src[0, 0] = 100
    assert W.values[0, 0] == 0
    with pytest.raises(ValueError):
        W.values[0, 0] = 1
    assert W.shape == (2, 3) and W.rows == 2 and W.cols == 3
    assert list(W.entries) == [0, 1, 2, 3, 4, 5]


@pytest.mark.parametrize("bad", [np.zeros(3), np.zeros((0, 2)), np.array([[1.0, np.nan]]),
                                 np.array([[np.inf]])])
def test_datamatrix_rejects(bad):
    with pytest.raises(InvalidArgumentError):
        DataMatrix(bad)


def test_from_entries_row_major():
    W = DataMatrix.from_entries(2, 2, [1, 2, 3, 4])
    assert W.values[1, 0] == 3
    with pytest.raises(InvalidArgumentError):
        DataMatrix.from_entries(2, 2, [1, 2, 3])


def test_index_sorted_and_validated():
    C = SubmatrixIndex((3, 1), (2, 0, 5))
    assert C.row_ids == (1, 3) and C.col_ids == (0, 2, 5)
    assert C.shape == (2, 3) and C.size == 6
    for rows, cols in [((1, 1), (0,)), ((), (0,)), ((-1,), (0,)), ((0.5,), (0,))]:
        with pytest.raises(InvalidArgumentError):
            SubmatrixIndex(rows, cols)


def test_index_bounds():
    W = DataMatrix(np.zeros((3, 3)))
    with pytest.raises(InvalidArgumentError):
        SubmatrixIndex((0, 3), (0,)).block(W)


def test_average_and_order_independence():
    W = gaussian_matrix(6, 7, 1)
    a = submatrix_average(W, SubmatrixIndex((4, 0, 2), (6, 1)))
    b = submatrix_average(W, SubmatrixIndex((0, 2, 4), (1, 6)))
    assert a == b
    assert a == pytest.approx(W.values[np.ix_([0, 2, 4], [1, 6])].mean(), rel=1e-14)


def test_average_is_exact_sum():
    W = DataMatrix(np.array([[1e16, 1.0, -1e16, 1.0]]))
    assert submatrix_average(W, SubmatrixIndex((0,), (0, 1, 2, 3))) == 0.5


def _anova_lstsq(block):
    # least-squares fit of mu + a_i + b_j, then residual sum of squares
    k, l = block.shape
    X = np.zeros((k * l, 1 + k + l))
    for i in range(k):
        for j in range(l):
            row = i * l + j
            X[row, 0] = 1
            X[row, 1 + i] = 1
            X[row, 1 + k + j] = 1
    y = block.ravel()
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ coef
    return float(r @ r) / ((k - 1) * (l - 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(2, 6), st.integers(0, 2 ** 32))
def test_anova_matches_least_squares(k, l, seed):
    W = gaussian_matrix(k, l, seed)
    C = SubmatrixIndex(tuple(range(k)), tuple(range(l)))
    assert anova_residual(W, C) == pytest.approx(_anova_lstsq(W.values), rel=1e-9, abs=1e-12)


def test_anova_zero_for_additive_block():
    a = np.array([1.0, -2.0, 0.5])
    b = np.array([3.0, 0.0, 1.0, 7.0])
    W = DataMatrix(a[:, None] + b[None, :] + 4.0)
    assert anova_residual(W, SubmatrixIndex((0, 1, 2), (0, 1, 2, 3))) == pytest.approx(0, abs=1e-24)
    with pytest.raises(InvalidArgumentError):
        anova_residual(W, SubmatrixIndex((0,), (0, 1)))


def test_gaussian_matrix_reproducible():
    assert gaussian_matrix(4, 5, 3) == gaussian_matrix(4, 5, 3)
    assert not gaussian_matrix(4, 5, 3) == gaussian_matrix(4, 5, 4)
    # prefix property: more rows do not change the first ones
    assert np.array_equal(gaussian_matrix(6, 5, 3).values[:4], gaussian_matrix(4, 5, 3).values)
    with pytest.raises(InvalidArgumentError):
        gaussian_matrix(0, 3, 1)


def test_embed_signal_leaves_input():
    W = DataMatrix(np.zeros((4, 4)))
    C = SubmatrixIndex((1, 2), (0, 3))
    Y = embed_signal(W, PlantedSignal(C, 2.5))
    assert W.values.sum() == 0
    assert Y.values.sum() == 10
    assert submatrix_average(Y, C) == 2.5
    with pytest.raises(InvalidArgumentError):
        PlantedSignal(C, math.nan)


def test_spec_examples():
    W = DataMatrix(np.array([[1.0, 2], [3, 4]]))
    assert submatrix_average(W, SubmatrixIndex((0, 1), (0, 1))) == 2.5
    Z = DataMatrix(np.zeros((5, 5)))
    assert submatrix_average(Z, SubmatrixIndex((1, 3), (0, 2, 4))) == 0.0
    a, b = np.array([1.0, 2]), np.array([3.0, 5])
    A = DataMatrix(a[:, None] + b[None, :] - 1)
    assert anova_residual(A, SubmatrixIndex((0, 1), (0, 1))) == 0.0


def test_anova_detects_single_perturbation():
    rng = np.random.default_rng(3)
    base = rng.standard_normal(4)[:, None] + rng.standard_normal(5)[None, :]
    C = SubmatrixIndex(tuple(range(4)), tuple(range(5)))
    assert anova_residual(DataMatrix(base), C) <= 1e-9
    bumped = base.copy()
    bumped[2, 3] += 1e-3
    assert anova_residual(DataMatrix(bumped), C) > 1e-9


def test_permutation_invariance_anova():
    W = gaussian_matrix(6, 6, 2)
    assert anova_residual(W, SubmatrixIndex((5, 1, 3), (4, 0, 2))) == \
        anova_residual(W, SubmatrixIndex((1, 3, 5), (0, 2, 4)))


def test_full_cover_is_grand_mean():
    W = gaussian_matrix(4, 6, 8)
    assert submatrix_average(W, SubmatrixIndex(tuple(range(4)), tuple(range(6)))) == \
        pytest.approx(W.values.mean(), rel=1e-13)


def test_average_null_variance():
    g = np.random.default_rng(0)
    vals = g.standard_normal((10_000, 3, 4)).mean(axis=(1, 2))
    assert abs(vals.var() * 12 - 1) < 0.05


def test_embed_examples():
    W = gaussian_matrix(6, 6, 1)
    C = SubmatrixIndex((0, 2), (1, 3))
    assert embed_signal(W, PlantedSignal(C, 0.0)) == W
    Y = embed_signal(W, PlantedSignal(C, 2.5))
    assert submatrix_average(Y, C) - submatrix_average(W, C) == pytest.approx(2.5, abs=1e-14)
    D = SubmatrixIndex((1, 4), (0, 5))
    assert submatrix_average(Y, D) == submatrix_average(W, D)
    with pytest.raises(InvalidArgumentError):
        embed_signal(W, PlantedSignal(SubmatrixIndex((6,), (0,)), 1.0))
