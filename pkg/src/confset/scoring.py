"""Nonconformity scores: squared distance to a class mean, feature-wise standardized.

The score of a point x for class k is

    sum_j (x_j - mu_kj)**2 / var_kj

using only the diagonal of the class covariance. In the empirical variant
(mu, var) are the class sample mean and unbiased sample variance; in the
oracle variant they are the true distribution parameters. Both variants share
one code path, so empirical-vs-oracle comparisons differ only in the moments
plugged in.
"""

from __future__ import annotations

import numpy as np

from .core import (
    ClassSummary,
    DataError,
    DegenerateVarianceError,
    LabeledDataset,
    OracleParams,
)

__all__ = ["fit_class_summary", "empirical_score", "oracle_score", "score_batch"]


def fit_class_summary(
    data: LabeledDataset,
    class_id: int,
    variance_floor: float | None = None,
) -> ClassSummary:
    """Fit mean and diagonal variance for one class.

    Parameters
    ----------
    data : LabeledDataset
    class_id : int
        Class in 1..K; the class is guaranteed >= 3 rows by construction.
    variance_floor : float, optional
        Replace variance entries below this floor by the floor itself.
        Off by default: a zero-variance column then raises
        ``DegenerateVarianceError`` naming the class and column.
    """
    rows = data.class_rows(class_id)
    mean = rows.mean(axis=0)
    var = rows.var(axis=0, ddof=1)
    if variance_floor is not None:
        if variance_floor <= 0:
            raise DataError(f"variance_floor must be positive, got {variance_floor}")
        var = np.maximum(var, variance_floor)
    elif np.any(var == 0.0):
        col = int(np.flatnonzero(var == 0.0)[0])
        raise DegenerateVarianceError(class_id, col)
    return ClassSummary(class_id=class_id, mean=mean, variance=var, count=rows.shape[0])


def _scores(mean: np.ndarray, var: np.ndarray, rows: np.ndarray) -> np.ndarray:
    if rows.shape[-1] != mean.shape[0]:
        raise DataError(
            f"point has {rows.shape[-1]} features, model has {mean.shape[0]}"
        )
    d = rows - mean
    return np.einsum("...j,...j->...", d, d / var)


def empirical_score(summary: ClassSummary, x: np.ndarray) -> float:
    """Score a single point against a fitted class summary."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError(f"x must be 1-D, got shape {x.shape}")
    return float(_scores(summary.mean, summary.variance, x))


def oracle_score(params: OracleParams, class_id: int, x: np.ndarray) -> float:
    """Score a single point against the true parameters of one class."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError(f"x must be 1-D, got shape {x.shape}")
    mean, var = params.class_params(class_id)
    return float(_scores(mean, var, x))


def score_batch(
    model: ClassSummary | OracleParams,
    rows: np.ndarray,
    class_id: int | None = None,
) -> np.ndarray:
    """Vectorized scores for a 2-D batch of points.

    ``model`` is either a fitted ClassSummary (class_id ignored) or
    OracleParams, in which case ``class_id`` picks the class.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise DataError(f"rows must be 2-D, got shape {rows.shape}")
    if isinstance(model, ClassSummary):
        mean, var = model.mean, model.variance
    elif isinstance(model, OracleParams):
        if class_id is None:
            raise DataError("class_id is required when scoring with OracleParams")
        mean, var = model.class_params(class_id)
    else:
        raise DataError(f"cannot score with {type(model).__name__}")
    return _scores(mean, var, rows)
