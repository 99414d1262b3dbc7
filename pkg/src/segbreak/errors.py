"""Exception types raised across the package.

Input problems (bad files, bad configs, degenerate data) derive from
``InputError``; estimation failures derive from ``EstimationError``. The CLI
maps the two families to distinct exit codes.
"""

from __future__ import annotations


class InputError(ValueError):
    """Base class for problems with user-supplied data or configuration."""


class SchemaError(InputError):
    """A declared CSV column is missing from the header."""


class DegenerateInput(InputError):
    """Data for which the requested transform or draw is undefined."""


class EstimationError(RuntimeError):
    """Base class for estimator failures."""


class RankDeficient(EstimationError):
    """Design matrix (or sparsity-weighted Gram matrix) is not of full column rank."""


class RankDeficientSegment(RankDeficient):
    """One side of the break has too few distinct regressor values."""


class NonConvergence(EstimationError):
    """Iterative solver hit its iteration cap before meeting its tolerance."""


class BandwidthOutOfRange(EstimationError):
    """``p - h`` or ``p + h`` falls outside the open unit interval."""


class NoValidCandidate(EstimationError):
    """No threshold candidate leaves both segments above the minimum bound."""
