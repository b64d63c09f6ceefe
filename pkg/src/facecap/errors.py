"""Exception types shared across the package."""


class FacecapError(Exception):
    """Base class for all facecap errors."""


class DegenerateInput(FacecapError):
    """Point set is degenerate (e.g. all points coincide)."""


class TooFewPoints(FacecapError):
    """Fewer data points than requested clusters."""


class SingularBlend(FacecapError):
    """Per-vertex jaw blend matrix is numerically singular."""


class OutOfBounds(FacecapError):
    """A crop or sample region falls outside the image."""


class InsufficientData(FacecapError):
    """Not enough samples to fit the requested model."""


class DimensionMismatch(FacecapError):
    """Array dimensions do not chain correctly."""


class LengthMismatch(FacecapError):
    """Sequences expected to have equal length do not."""
