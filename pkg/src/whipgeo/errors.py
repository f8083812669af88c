"""Exception types shared across the package.

Every failure mode that callers are expected to handle gets its own class so
that scripts can catch precisely what they care about.  All of them derive
from :class:`WhipGeoError`.
"""

from __future__ import annotations


class WhipGeoError(Exception):
    """Base class for all package-specific errors."""


class OddNodeCount(WhipGeoError):
    """Fixed-free grids need an even interval count so s=0 is a node."""


class DegenerateImmersion(WhipGeoError):
    """A curve's derivative vanished where a direction angle was needed."""


class SolveFailure(WhipGeoError):
    """A linear solve produced non-finite values or lost its pivot."""


class FlatCurve(WhipGeoError):
    """Periodic solve requested on a curve with identically zero curvature."""


class CflViolation(WhipGeoError):
    """Requested time step exceeds the stability bound for the current tension."""


class DriftBudgetExceeded(WhipGeoError):
    """Arc-length constraint drifted past the hard abort budget."""


class ParallelSection(WhipGeoError):
    """Sectional curvature requested on a linearly dependent pair of fields."""


class LengthMismatch(WhipGeoError):
    """Curve length too far from the reference length for reparametrization."""


class ReconstructionDrift(WhipGeoError):
    """Curve rebuilt from evolved curvature disagrees with the evolved state."""


class ConfigInvalid(WhipGeoError):
    """Scenario configuration failed validation; nothing was run."""
