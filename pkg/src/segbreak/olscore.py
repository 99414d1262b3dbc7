"""Least squares for the segmented mean model."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg

from segbreak.datamodel import (
    DEFAULT_MIN_SEGMENT,
    Dataset,
    SegmentedCoefficients,
    SegmentedFit,
    check_partition,
    design_matrix,
    segment_masks,
)
from segbreak.errors import RankDeficient

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

RANK_RTOL = 1e-10
SE_FLAVORS = ("classical", "hc1")


def _pivoted_qr(X: NDArray[np.float64]):
    n, k = X.shape
    if n <= k:
        raise RankDeficient(f"need more rows than columns (got {n}x{k})")
    Q, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    scale = float(np.max(np.linalg.norm(X, axis=0))) if X.size else 0.0
    diag = np.abs(np.diag(R))
    if scale == 0 or diag.min() <= RANK_RTOL * scale:
        rank = int(np.count_nonzero(diag > RANK_RTOL * scale)) if scale else 0
        raise RankDeficient(f"design has rank {rank} < {k}")
    return Q, R, piv


def ols_fit(X: ArrayLike, y: ArrayLike) -> tuple[NDArray[np.float64], float]:
    """Least squares coefficients and sum of squared residuals.

    Solved through a column-pivoted QR factorization. Raises
    :class:`RankDeficient` when a pivot falls below ``1e-10`` times the largest
    column norm.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    Q, R, piv = _pivoted_qr(X)
    z = scipy.linalg.solve_triangular(R, Q.T @ y)
    beta = np.empty_like(z)
    beta[piv] = z
    resid = y - X @ beta
    return beta, float(resid @ resid)


def _xtx_inv(X: NDArray[np.float64]) -> NDArray[np.float64]:
    _, R, piv = _pivoted_qr(X)
    Rinv = scipy.linalg.solve_triangular(R, np.eye(R.shape[0]))
    inv_p = Rinv @ Rinv.T
    out = np.empty_like(inv_p)
    out[np.ix_(piv, piv)] = inv_p
    return out


def ols_covariance(
    X: ArrayLike, y: ArrayLike, beta: ArrayLike, flavor: str = "classical"
) -> NDArray[np.float64]:
    """Coefficient covariance: ``classical`` (homoskedastic) or ``hc1`` (White, df-scaled)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    n, k = X.shape
    resid = y - X @ np.asarray(beta, dtype=float)
    bread = _xtx_inv(X)
    if flavor == "classical":
        s2 = float(resid @ resid) / (n - k)
        return s2 * bread
    if flavor == "hc1":
        meat = (X * resid[:, None] ** 2).T @ X
        return bread @ meat @ bread * (n / (n - k))
    raise ValueError(f"unknown SE flavor {flavor!r}; expected one of {SE_FLAVORS}")


def fit_segmented_mean(
    dataset: Dataset,
    tau: float,
    se: str = "classical",
    min_segment: int = DEFAULT_MIN_SEGMENT,
) -> SegmentedFit:
    """OLS fit of the z-scored well-being on the segmented log-income design."""
    check_partition(dataset, tau, min_segment)
    X, y = design_matrix(dataset, tau, "zscore")
    beta, ssr = ols_fit(X, y)
    cov = ols_covariance(X, y, beta, se)
    se_vec = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    left, right = segment_masks(dataset, tau)
    return SegmentedFit(
        coefficients=SegmentedCoefficients(*map(float, beta), tau=float(tau)),
        std_errors=tuple(map(float, se_vec)),
        t_stats=SegmentedFit.t_from(beta, se_vec),
        objective=ssr,
        n_left=int(left.sum()),
        n_right=int(right.sum()),
        estimator_tag="mean",
        dependent_tag="zscore",
        se_flavor=se,
    )
