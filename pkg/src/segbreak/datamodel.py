"""Domain types and the deterministic transforms shared by every estimator.

The segmented model has one break at an income threshold ``tau``: observations
with ``income <= tau`` follow ``a + b*x`` and the rest follow ``c + d*x``,
where ``x`` is natural log income. Income exactly equal to ``tau`` is assigned
to the left segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Literal

import numpy as np

from segbreak.errors import DegenerateInput, InputError, RankDeficientSegment

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from numpy.typing import ArrayLike, NDArray

DEFAULT_BRACKETS: tuple[float, ...] = (
    15000.0, 25000.0, 35000.0, 45000.0, 55000.0, 65000.0, 75000.0, 85000.0,
    95000.0, 112500.0, 137500.0, 175000.0, 250000.0, 400000.0, 625000.0,
)

#: Smallest number of distinct income brackets allowed on each side of a break.
DEFAULT_MIN_SEGMENT = 2

TAU_CONVENTION = "left-inclusive"
COEF_NAMES = ("a", "b", "c", "d")

Dependent = Literal["zscore", "raw"]


def _readonly(values: ArrayLike) -> NDArray[np.float64]:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class BracketTable:
    """Strictly increasing set of positive income group values (dollars/year)."""

    values: tuple[float, ...] = DEFAULT_BRACKETS

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        if len(vals) < 2:
            raise InputError("bracket table needs at least 2 values")
        if any(not math.isfinite(v) or v <= 0 for v in vals):
            raise InputError("bracket values must be finite and positive")
        if any(hi <= lo for lo, hi in zip(vals, vals[1:])):
            raise InputError("bracket values must be strictly increasing")
        object.__setattr__(self, "values", vals)

    def __contains__(self, income: object) -> bool:
        return income in self._lookup

    def __len__(self) -> int:
        return len(self.values)

    @property
    def _lookup(self) -> frozenset[float]:
        return frozenset(self.values)


@dataclass(frozen=True)
class Observation:
    """One person's income bracket and mean well-being score."""

    wellbeing: float
    income: float

    @property
    def log_income(self) -> float:
        return math.log(self.income)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable per-person sample with derived log income and z-scores.

    Build with :meth:`from_arrays` (or the loaders in :mod:`segbreak.ingest`);
    the constructor validates every row against the bracket table.
    """

    income: NDArray[np.float64]
    wellbeing: NDArray[np.float64]
    bracket_table: BracketTable = field(default_factory=BracketTable)
    check_range: bool = True
    log_income: NDArray[np.float64] = field(init=False, repr=False)
    zscores: NDArray[np.float64] = field(init=False, repr=False)
    wellbeing_mean: float = field(init=False)
    wellbeing_sd: float = field(init=False)

    def __post_init__(self) -> None:
        income = _readonly(self.income).reshape(-1)
        wellbeing = _readonly(self.wellbeing).reshape(-1)
        if income.shape != wellbeing.shape:
            raise InputError("income and wellbeing must have the same length")
        if income.size < 2:
            raise DegenerateInput("dataset needs at least 2 observations")
        if not np.all(np.isfinite(wellbeing)):
            raise InputError("well-being values must be finite")
        if self.check_range and (wellbeing.min() < 0 or wellbeing.max() > 100):
            raise InputError("well-being values must lie in [0, 100]")
        known = np.isin(income, np.asarray(self.bracket_table.values))
        if not known.all():
            bad = int(np.flatnonzero(~known)[0])
            raise InputError(f"income {income[bad]!r} at row {bad} is not a bracket value")
        object.__setattr__(self, "income", income)
        object.__setattr__(self, "wellbeing", wellbeing)
        object.__setattr__(self, "log_income", _readonly(np.log(income)))
        z = zscore(wellbeing)
        object.__setattr__(self, "zscores", _readonly(z))
        object.__setattr__(self, "wellbeing_mean", float(wellbeing.mean()))
        object.__setattr__(self, "wellbeing_sd", float(wellbeing.std(ddof=1)))

    @classmethod
    def from_arrays(
        cls,
        income: ArrayLike,
        wellbeing: ArrayLike,
        bracket_table: BracketTable | None = None,
        check_range: bool = True,
    ) -> Dataset:
        return cls(
            income=np.asarray(income, dtype=float),
            wellbeing=np.asarray(wellbeing, dtype=float),
            bracket_table=bracket_table or BracketTable(),
            check_range=check_range,
        )

    @classmethod
    def from_observations(
        cls, observations: Iterable[Observation], bracket_table: BracketTable | None = None
    ) -> Dataset:
        obs = list(observations)
        return cls.from_arrays(
            [o.income for o in obs], [o.wellbeing for o in obs], bracket_table
        )

    @property
    def n(self) -> int:
        return int(self.income.size)

    @property
    def observations(self) -> tuple[Observation, ...]:
        return tuple(
            Observation(wellbeing=float(w), income=float(i))
            for i, w in zip(self.income, self.wellbeing)
        )

    def response(self, dependent: Dependent) -> NDArray[np.float64]:
        if dependent == "zscore":
            return self.zscores
        if dependent == "raw":
            return self.wellbeing
        raise ValueError(f"unknown dependent variable {dependent!r}")

    def distinct_incomes(self) -> NDArray[np.float64]:
        return np.unique(self.income)

    def permuted(self, order: Sequence[int]) -> Dataset:
        idx = np.asarray(order)
        return Dataset(
            income=self.income[idx],
            wellbeing=self.wellbeing[idx],
            bracket_table=self.bracket_table,
            check_range=self.check_range,
        )


@dataclass(frozen=True)
class SegmentedCoefficients:
    """Intercept/slope below (a, b) and above (c, d) the threshold ``tau``."""

    a: float
    b: float
    c: float
    d: float
    tau: float

    def __post_init__(self) -> None:
        vals = (self.a, self.b, self.c, self.d, self.tau)
        if not all(math.isfinite(v) for v in vals):
            raise InputError("segmented coefficients must be finite")
        if self.tau <= 0:
            raise InputError("tau must be positive")

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.a, self.b, self.c, self.d])

    def mean_at(self, income: ArrayLike) -> NDArray[np.float64]:
        """Evaluate the piecewise line at the given incomes (dollars/year)."""
        inc = np.asarray(income, dtype=float)
        x = np.log(inc)
        left = inc <= self.tau
        return np.where(left, self.a + self.b * x, self.c + self.d * x)


@dataclass(frozen=True)
class SegmentedFit:
    """Estimated segmented model with inference and bookkeeping."""

    coefficients: SegmentedCoefficients
    std_errors: tuple[float, float, float, float]
    t_stats: tuple[float, float, float, float]
    objective: float
    n_left: int
    n_right: int
    estimator_tag: str
    dependent_tag: str
    se_flavor: str
    equivalence_interval: tuple[float, float] | None = None

    @staticmethod
    def t_from(beta: NDArray[np.float64], se: NDArray[np.float64]) -> tuple[float, ...]:
        # t-stat undefined when the standard error is zero
        return tuple(float(b / s) if s > 0 else math.nan for b, s in zip(beta, se))

    def to_dict(self) -> dict:
        coef = self.coefficients
        out = {
            "estimator": self.estimator_tag,
            "dependent": self.dependent_tag,
            "se_flavor": self.se_flavor,
            "tau": coef.tau,
            "coefficients": dict(zip(COEF_NAMES, coef.as_array().tolist())),
            "std_errors": dict(zip(COEF_NAMES, self.std_errors)),
            "t_stats": dict(zip(COEF_NAMES, self.t_stats)),
            "objective": self.objective,
            "n_left": self.n_left,
            "n_right": self.n_right,
        }
        if self.equivalence_interval is not None:
            out["equivalence_interval"] = list(self.equivalence_interval)
        return out


@dataclass(frozen=True)
class ThresholdProfile:
    """Objective value per candidate threshold and the minimizing partition."""

    candidates: tuple[tuple[float, float], ...]
    argmin_candidate: float
    equivalence_interval: tuple[float, float]
    tied_candidates: tuple[float, ...]
    estimator_tag: str

    @property
    def taus(self) -> NDArray[np.float64]:
        return np.array([c for c, _ in self.candidates])

    @property
    def objectives(self) -> NDArray[np.float64]:
        return np.array([o for _, o in self.candidates])

    @property
    def has_ties(self) -> bool:
        return len(self.tied_candidates) > 1

    @property
    def min_objective(self) -> float:
        return dict(self.candidates)[self.argmin_candidate]


def zscore(values: ArrayLike) -> NDArray[np.float64]:
    """Standardize to sample mean 0 and sample sd 1 (divisor ``N - 1``).

    Raises
    ------
    DegenerateInput
        Fewer than two values, or all values equal.
    """
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size < 2:
        raise DegenerateInput("z-scoring needs at least 2 values")
    centred = v - v.mean()
    sd = math.sqrt(float(centred @ centred) / (v.size - 1))
    if sd == 0 or np.all(v == v[0]):
        raise DegenerateInput("z-scoring undefined: all values are equal")
    return centred / sd


def segment_masks(
    dataset: Dataset, tau: float
) -> tuple[NDArray[np.bool_], NDArray[np.bool_]]:
    left = dataset.income <= tau
    return left, ~left


def segment_brackets(dataset: Dataset, tau: float) -> tuple[int, int]:
    """Number of distinct incomes on each side of ``tau``."""
    distinct = dataset.distinct_incomes()
    n_left = int(np.count_nonzero(distinct <= tau))
    return n_left, distinct.size - n_left


def check_partition(dataset: Dataset, tau: float, min_segment: int = DEFAULT_MIN_SEGMENT) -> None:
    """Raise :class:`RankDeficientSegment` unless both sides meet ``min_segment``."""
    if not tau > 0:
        raise InputError("tau must be positive")
    bound = max(2, int(min_segment))
    n_left, n_right = segment_brackets(dataset, tau)
    if n_left < bound or n_right < bound:
        raise RankDeficientSegment(
            f"tau={tau:g} leaves {n_left} distinct income value(s) below and "
            f"{n_right} above; need at least {bound} on each side"
        )


def design_matrix(
    dataset: Dataset, tau: float, dependent: Dependent = "zscore"
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Segmented design matrix with columns ordered (a, b, c, d), plus response.

    Row ``i`` is ``[L, x*L, R, x*R]`` where ``L = 1{income <= tau}`` and
    ``R = 1 - L``.
    """
    check_partition(dataset, tau, 2)
    left = (dataset.income <= tau).astype(float)
    right = 1.0 - left
    x = dataset.log_income
    X = np.column_stack([left, x * left, right, x * right])
    X.setflags(write=False)
    return X, dataset.response(dependent)


def equivalence_interval(dataset: Dataset, tau: float) -> tuple[float, float]:
    """Half-open dollar interval of thresholds giving the same partition as ``tau``."""
    distinct = dataset.distinct_incomes()
    below = distinct[distinct <= tau]
    above = distinct[distinct > tau]
    lo = float(below[-1]) if below.size else 0.0
    hi = float(above[0]) if above.size else math.inf
    return lo, hi
