"""Serialization of profiles, fits and reports to CSV and JSON.

CSV numbers are written with 17 significant digits; JSON uses Python's
shortest round-trip float repr. Both parse back to the same doubles.
Non-finite values become empty CSV cells and JSON ``null``.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from segbreak import __version__
from segbreak.datamodel import COEF_NAMES, TAU_CONVENTION, Dataset, SegmentedFit, ThresholdProfile
from segbreak.ingest import group_stats
from segbreak.olscore import RANK_RTOL
from segbreak.quantreg import GAP_TOL, MAX_ITER, MAX_PIVOTS, QuantileSpec

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence


def fmt(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return f"{v:.17g}" if math.isfinite(v) else ""
    if value is None:
        return ""
    return str(value)


def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path: Path, payload: dict) -> None:
    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=False, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def metadata(
    *,
    command: str,
    estimator: str,
    se_flavor: str | None,
    min_segment: int,
    seed: int | None,
    source: dict,
    alpha: float | None = None,
    quantiles: Sequence[float] = (),
) -> dict:
    solver: dict[str, Any] = {"ols": {"method": "pivoted-qr", "rank_rtol": RANK_RTOL}}
    if quantiles or estimator.startswith("quantile"):
        solver["quantile"] = {
            "method": "frisch-newton-interior-point+vertex-descent",
            "duality_gap_rtol": GAP_TOL,
            "max_iter": MAX_ITER,
            "max_pivots": MAX_PIVOTS,
            "covariance": "nid-sandwich",
            "bandwidth": "hall-sheather",
            "alpha": alpha,
            "sparsity_eps": QuantileSpec(0.5).sparsity_eps,
        }
    return {
        "tool": "segbreak",
        "version": __version__,
        "command": command,
        "estimator": estimator,
        "quantiles": list(quantiles),
        "se_flavor": se_flavor,
        "tau_convention": TAU_CONVENTION,
        "min_segment": min_segment,
        "seed": seed,
        "source": source,
        "solver": solver,
    }


def interval_json(interval: tuple[float, float]) -> list:
    lo, hi = interval
    return [lo, hi if math.isfinite(hi) else None]


def profile_payload(profile: ThresholdProfile) -> dict:
    return {
        "estimator": profile.estimator_tag,
        "candidates": [{"tau": t, "objective": o} for t, o in profile.candidates],
        "argmin": profile.argmin_candidate,
        "min_objective": profile.min_objective,
        "ties": list(profile.tied_candidates),
        "has_ties": profile.has_ties,
        "equivalence_interval": interval_json(profile.equivalence_interval),
    }


def write_profile(profile: ThresholdProfile, out: Path, fmt_: str, meta: dict, stem: str = "scan") -> list[Path]:
    written = []
    if fmt_ in ("csv", "both"):
        path = out / f"{stem}_profile.csv"
        write_rows(path, ["tau", "objective"], profile.candidates)
        written.append(path)
    if fmt_ in ("json", "both"):
        path = out / f"{stem}_profile.json"
        write_json(path, {"metadata": meta, "profile": profile_payload(profile)})
        written.append(path)
    return written


def plot_data(dataset: Dataset, fit: SegmentedFit, p: float | None) -> list[dict]:
    """Fitted line at each observed bracket plus the per-bracket sample statistic."""
    if fit.estimator_tag == "mean":
        stats = group_stats(dataset, "mean", dependent=fit.dependent_tag)
    else:
        stats = group_stats(dataset, "quantile", p=p, dependent=fit.dependent_tag)
    fitted = fit.coefficients.mean_at([s[0] for s in stats])
    return [
        {
            "income": inc,
            "log_income": math.log(inc),
            "fitted": float(fv),
            "group_stat": stat,
            "count": count,
        }
        for (inc, stat, count), fv in zip(stats, fitted)
    ]


def fit_payload(dataset: Dataset, fit: SegmentedFit, p: float | None) -> dict:
    out = fit.to_dict()
    if "equivalence_interval" in out:
        out["equivalence_interval"] = interval_json(fit.equivalence_interval)
    out["p"] = p
    out["plot"] = plot_data(dataset, fit, p)
    return out


FIT_HEADER = ["panel", "estimator", "p", "tau", "coef", "estimate", "std_error", "t_stat",
              "objective", "n_left", "n_right"]
PLOT_HEADER = ["panel", "estimator", "p", "tau", "income", "log_income", "fitted", "group_stat", "count"]


def fit_rows(panel: str, payload: dict) -> list[list]:
    return [
        [panel, payload["estimator"], payload["p"], payload["tau"], name,
         payload["coefficients"][name], payload["std_errors"][name], payload["t_stats"][name],
         payload["objective"], payload["n_left"], payload["n_right"]]
        for name in COEF_NAMES
    ]


def plot_rows(panel: str, payload: dict) -> list[list]:
    return [
        [panel, payload["estimator"], payload["p"], payload["tau"], pt["income"],
         pt["log_income"], pt["fitted"], pt["group_stat"], pt["count"]]
        for pt in payload["plot"]
    ]


def write_fits(
    fits: Sequence[tuple[str, dict]], out: Path, fmt_: str, meta: dict, stem: str, extra: dict | None = None
) -> list[Path]:
    written = []
    if fmt_ in ("csv", "both"):
        path = out / f"{stem}.csv"
        write_rows(path, FIT_HEADER, [r for panel, pl in fits for r in fit_rows(panel, pl)])
        written.append(path)
        path = out / f"{stem}_plot.csv"
        write_rows(path, PLOT_HEADER, [r for panel, pl in fits for r in plot_rows(panel, pl)])
        written.append(path)
    if fmt_ in ("json", "both"):
        path = out / f"{stem}.json"
        body = {"metadata": meta, "fits": [{"panel": panel, **pl} for panel, pl in fits]}
        if extra:
            body.update(extra)
        write_json(path, body)
        written.append(path)
    return written


def simulation_rows(report: dict) -> list[list]:
    rows = []
    for name, stats in report["mean"].items():
        rows.append(["mean", name, stats["bias"], stats["rmse"], stats["coverage"]])
    for tag, block in report["quantile"].items():
        for name, stats in block.items():
            rows.append([tag, name, stats["bias"], stats["rmse"], stats["coverage"]])
    return rows
