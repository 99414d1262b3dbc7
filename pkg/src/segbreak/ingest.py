"""Loading per-person CSV files, synthetic data generation, per-bracket summaries."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from segbreak.datamodel import (
    DEFAULT_MIN_SEGMENT,
    BracketTable,
    Dataset,
    SegmentedCoefficients,
    segment_brackets,
)
from segbreak.errors import DegenerateInput, InputError, SchemaError

if TYPE_CHECKING:
    from collections.abc import Sequence

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SchemaConfig:
    """Column names for the income and well-being fields."""

    income_col: str = "income"
    wellbeing_col: str = "wellbeing"


def _parse_number(text: str, column: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise InputError(f"line {line}: non-numeric {column} value {text!r}") from None
    if not math.isfinite(value):
        raise InputError(f"line {line}: non-finite {column} value {text!r}")
    return value


def load_csv(
    path: str | Path,
    schema: SchemaConfig | None = None,
    bracket_table: BracketTable | None = None,
) -> Dataset:
    """Read a comma-delimited UTF-8 file with a header row into a Dataset.

    Every row must carry a numeric well-being score in [0, 100] and an income
    equal to one of the bracket values. The first offending row aborts the
    load; its 1-based file line number is in the message.
    """
    schema = schema or SchemaConfig()
    table = bracket_table or BracketTable()
    path = Path(path)
    incomes: list[float] = []
    scores: list[float] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in (schema.income_col, schema.wellbeing_col):
            if col not in header:
                raise SchemaError(f"{path}: missing column {col!r} (header: {header})")
        for row in reader:
            line = reader.line_num
            income = _parse_number(row[schema.income_col], schema.income_col, line)
            score = _parse_number(row[schema.wellbeing_col], schema.wellbeing_col, line)
            if not 0 <= score <= 100:
                raise InputError(f"line {line}: well-being {score:g} outside [0, 100]")
            if income not in table:
                raise InputError(f"line {line}: income {income:g} is not a bracket value")
            incomes.append(income)
            scores.append(score)
    logger.info("loaded %d rows from %s", len(incomes), path)
    return Dataset.from_arrays(incomes, scores, table)


def write_csv(dataset: Dataset, path: str | Path, schema: SchemaConfig | None = None) -> None:
    schema = schema or SchemaConfig()
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([schema.income_col, schema.wellbeing_col])
        for inc, score in zip(dataset.income, dataset.wellbeing):
            writer.writerow([repr(float(inc)), repr(float(score))])


@dataclass(frozen=True)
class SyntheticConfig:
    """Data-generating process for the segmented mean model.

    ``bracket_weights`` defaults to uniform over the bracket table.
    """

    true_coefficients: SegmentedCoefficients
    noise_sd: float = 1.0
    n: int = 2000
    bracket_weights: tuple[float, ...] | None = None
    seed: int = 0
    clamp: bool = False
    bracket_table: BracketTable = field(default_factory=BracketTable)
    min_segment: int = DEFAULT_MIN_SEGMENT

    def __post_init__(self) -> None:
        if self.n < 4:
            raise InputError("synthetic n must be at least 4")
        if not self.noise_sd >= 0:
            raise InputError("noise_sd must be non-negative")
        if self.bracket_weights is not None:
            w = np.asarray(self.bracket_weights, dtype=float)
            if w.shape != (len(self.bracket_table),):
                raise InputError("bracket_weights must have one entry per bracket")
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise InputError("bracket_weights must be non-negative and sum to 1")
            object.__setattr__(self, "bracket_weights", tuple(float(v) for v in w))

    @property
    def weights(self) -> np.ndarray:
        if self.bracket_weights is None:
            k = len(self.bracket_table)
            return np.full(k, 1.0 / k)
        return np.asarray(self.bracket_weights)

    def with_seed(self, seed: int) -> SyntheticConfig:
        return SyntheticConfig(
            true_coefficients=self.true_coefficients,
            noise_sd=self.noise_sd,
            n=self.n,
            bracket_weights=self.bracket_weights,
            seed=seed,
            clamp=self.clamp,
            bracket_table=self.bracket_table,
            min_segment=self.min_segment,
        )

    def to_dict(self) -> dict:
        coef = self.true_coefficients
        return {
            "a": coef.a, "b": coef.b, "c": coef.c, "d": coef.d, "tau": coef.tau,
            "noise_sd": self.noise_sd,
            "n": self.n,
            "bracket_weights": None if self.bracket_weights is None else list(self.bracket_weights),
            "brackets": list(self.bracket_table.values),
            "seed": self.seed,
            "clamp": self.clamp,
            "min_segment": self.min_segment,
        }

    @classmethod
    def from_dict(cls, data: dict) -> SyntheticConfig:
        known = {"a", "b", "c", "d", "tau", "noise_sd", "n", "bracket_weights",
                 "brackets", "seed", "clamp", "min_segment"}
        unknown = set(data) - known
        if unknown:
            raise InputError(f"unknown synthetic config keys: {sorted(unknown)}")
        try:
            coef = SegmentedCoefficients(
                float(data["a"]), float(data["b"]), float(data["c"]),
                float(data["d"]), float(data["tau"]),
            )
        except KeyError as exc:
            raise InputError(f"synthetic config missing key {exc}") from None
        table = BracketTable(tuple(data["brackets"])) if data.get("brackets") else BracketTable()
        weights = data.get("bracket_weights")
        return cls(
            true_coefficients=coef,
            noise_sd=float(data.get("noise_sd", 1.0)),
            n=int(data.get("n", 2000)),
            bracket_weights=None if weights is None else tuple(weights),
            seed=int(data.get("seed", 0)),
            clamp=bool(data.get("clamp", False)),
            bracket_table=table,
            min_segment=int(data.get("min_segment", DEFAULT_MIN_SEGMENT)),
        )

    @classmethod
    def from_json(cls, path: str | Path) -> SyntheticConfig:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(data)


def synthesize(config: SyntheticConfig) -> Dataset:
    """Draw a dataset from the segmented mean model plus Gaussian noise.

    Incomes are i.i.d. draws from ``config.bracket_weights``. Deterministic for
    a given ``config.seed``.
    """
    rng = np.random.default_rng(config.seed)
    brackets = np.asarray(config.bracket_table.values)
    income = rng.choice(brackets, size=config.n, p=config.weights)
    score = config.true_coefficients.mean_at(income) + config.noise_sd * rng.standard_normal(config.n)
    if config.clamp:
        score = np.clip(score, 0.0, 100.0)
    ds = Dataset.from_arrays(income, score, config.bracket_table, check_range=config.clamp)
    n_left, n_right = segment_brackets(ds, config.true_coefficients.tau)
    bound = max(2, config.min_segment)
    if n_left < bound or n_right < bound:
        raise DegenerateInput(
            f"seed {config.seed}: draw leaves {n_left}/{n_right} distinct brackets "
            f"around tau={config.true_coefficients.tau:g}; need {bound} per side"
        )
    return ds


def sample_quantile(values: np.ndarray, p: float) -> float:
    """Linear interpolation between order statistics at position ``(n - 1) * p``."""
    return float(np.quantile(np.asarray(values, dtype=float), p, method="linear"))


def group_stats(
    dataset: Dataset,
    statistic: str = "mean",
    p: float | None = None,
    dependent: str = "raw",
) -> list[tuple[float, float, int]]:
    """Per-bracket ``(income, statistic, count)`` in ascending income order.

    ``statistic`` is ``"mean"`` or ``"quantile"`` (with ``p``). ``dependent``
    picks raw well-being or its z-score.
    """
    y = dataset.response(dependent)
    out = []
    for income in dataset.distinct_incomes():
        vals = y[dataset.income == income]
        if statistic == "mean":
            stat = float(vals.mean())
        elif statistic == "quantile":
            if p is None or not 0 <= p <= 1:
                raise InputError("quantile statistic needs p in [0, 1]")
            stat = sample_quantile(vals, p)
        else:
            raise InputError(f"unknown statistic {statistic!r}")
        out.append((float(income), stat, int(vals.size)))
    return out


def write_group_stats(
    rows: Sequence[tuple[float, float, int]], path: str | Path, fmt: str = "csv"
) -> None:
    path = Path(path)
    if fmt == "csv":
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["income", "stat", "count"])
            for income, stat, count in rows:
                writer.writerow([f"{income:.17g}", f"{stat:.17g}", count])
    elif fmt == "json":
        payload = [{"income": i, "stat": s, "count": c} for i, s, c in rows]
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    else:
        raise InputError(f"unknown format {fmt!r}")
