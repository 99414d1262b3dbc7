"""Threshold selection by exhaustive scan over the observed income values.

With bracketed income the objective is a step function of the threshold, so
evaluating one candidate per distinct income value is exhaustive. The result
is reported as the half-open interval of thresholds that give the same split
of the data as the minimizing candidate.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import TYPE_CHECKING

import numpy as np

from segbreak.datamodel import (
    DEFAULT_MIN_SEGMENT,
    Dataset,
    SegmentedFit,
    ThresholdProfile,
    design_matrix,
    equivalence_interval,
)
from segbreak.errors import EstimationError, InputError, NoValidCandidate
from segbreak.olscore import fit_segmented_mean, ols_fit
from segbreak.quantreg import QuantileSpec, fit_segmented_quantile, qr_fit, quantile_tag

if TYPE_CHECKING:
    from collections.abc import Callable

logger = logging.getLogger(__name__)

#: Objectives within this relative distance of the minimum count as tied.
TIE_RTOL = 1e-10


def estimator_tag(estimator: str, p: float | None = None) -> str:
    if estimator == "mean":
        return "mean"
    if estimator == "quantile":
        if p is None:
            raise InputError("quantile estimator needs p")
        return quantile_tag(p)
    raise InputError(f"unknown estimator {estimator!r}")


def candidate_thresholds(dataset: Dataset, min_segment: int = DEFAULT_MIN_SEGMENT) -> list[float]:
    """Distinct observed incomes whose ``<=`` split leaves ``min_segment`` values per side."""
    bound = max(2, int(min_segment))
    distinct = dataset.distinct_incomes()
    m = distinct.size
    # candidate i puts distinct[:i+1] on the left
    out = [float(distinct[i]) for i in range(m) if i + 1 >= bound and m - i - 1 >= bound]
    if not out:
        raise NoValidCandidate(
            f"{m} distinct income value(s) cannot give {bound} per side of a break"
        )
    return out


def _objective_fn(
    dataset: Dataset, estimator: str, spec: QuantileSpec | None
) -> Callable[[float], float]:
    if estimator == "mean":
        def objective(tau: float) -> float:
            X, y = design_matrix(dataset, tau, "zscore")
            return ols_fit(X, y)[1]
    elif estimator == "quantile":
        if spec is None:
            raise InputError("quantile estimator needs a QuantileSpec")

        def objective(tau: float) -> float:
            X, y = design_matrix(dataset, tau, "raw")
            return qr_fit(X, y, spec.p)[1]
    else:
        raise InputError(f"unknown estimator {estimator!r}")
    return objective


def scan(
    dataset: Dataset,
    estimator: str = "mean",
    min_segment: int = DEFAULT_MIN_SEGMENT,
    spec: QuantileSpec | None = None,
    workers: int = 1,
) -> ThresholdProfile:
    """Objective at every valid candidate threshold and the minimizing split.

    Ties (within ``TIE_RTOL`` of the minimum) resolve to the smallest
    candidate; all tied candidates are listed on the profile.
    """
    candidates = candidate_thresholds(dataset, min_segment)
    objective = _objective_fn(dataset, estimator, spec)

    def run(tau: float) -> float:
        try:
            return objective(tau)
        except EstimationError as exc:
            raise type(exc)(f"scan failed at candidate tau={tau:g}: {exc}") from exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(run, candidates))
    else:
        values = [run(tau) for tau in candidates]

    obj = np.asarray(values)
    best = float(obj.min())
    tied = [tau for tau, v in zip(candidates, values) if v - best <= TIE_RTOL * (1.0 + abs(best))]
    argmin = tied[0]
    if len(tied) > 1:
        logger.info("scan: %d tied candidates, taking %g", len(tied), argmin)
    return ThresholdProfile(
        candidates=tuple(zip(candidates, map(float, values))),
        argmin_candidate=argmin,
        equivalence_interval=equivalence_interval(dataset, argmin),
        tied_candidates=tuple(tied),
        estimator_tag=estimator_tag(estimator, None if spec is None else spec.p),
    )


def fit_at(
    dataset: Dataset,
    tau: float,
    estimator: str = "mean",
    spec: QuantileSpec | None = None,
    se: str = "classical",
    min_segment: int = DEFAULT_MIN_SEGMENT,
) -> SegmentedFit:
    """Fit the segmented model at ``tau``, annotated with its equivalence interval."""
    if estimator == "mean":
        fit = fit_segmented_mean(dataset, tau, se=se, min_segment=min_segment)
    elif estimator == "quantile":
        if spec is None:
            raise InputError("quantile estimator needs a QuantileSpec")
        fit = fit_segmented_quantile(dataset, tau, spec, min_segment=min_segment)
    else:
        raise InputError(f"unknown estimator {estimator!r}")
    return replace(fit, equivalence_interval=equivalence_interval(dataset, tau))

