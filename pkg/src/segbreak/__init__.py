"""Segmented (one-break) mean and quantile regression of well-being on log income."""

__version__ = "0.1.0"

from segbreak.breakscan import candidate_thresholds, fit_at, scan
from segbreak.datamodel import (
    BracketTable,
    Dataset,
    Observation,
    SegmentedCoefficients,
    SegmentedFit,
    ThresholdProfile,
    design_matrix,
    zscore,
)
from segbreak.ingest import SchemaConfig, SyntheticConfig, group_stats, load_csv, synthesize, write_csv
from segbreak.olscore import fit_segmented_mean, ols_covariance, ols_fit
from segbreak.quantreg import (
    QuantileSpec,
    fit_segmented_quantile,
    hall_sheather_bandwidth,
    pinball_loss,
    qr_fit,
    qr_sandwich_covariance,
)

__all__ = [
    "BracketTable",
    "Dataset",
    "Observation",
    "QuantileSpec",
    "SchemaConfig",
    "SegmentedCoefficients",
    "SegmentedFit",
    "SyntheticConfig",
    "ThresholdProfile",
    "candidate_thresholds",
    "design_matrix",
    "fit_at",
    "fit_segmented_mean",
    "fit_segmented_quantile",
    "group_stats",
    "hall_sheather_bandwidth",
    "load_csv",
    "ols_covariance",
    "ols_fit",
    "pinball_loss",
    "qr_fit",
    "qr_sandwich_covariance",
    "scan",
    "synthesize",
    "write_csv",
    "zscore",
]
