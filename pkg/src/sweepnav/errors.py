"""Exception types shared across the package."""


class SweepNavError(Exception):
    """Base class for all sweepnav errors."""


class SweepParseError(SweepNavError):
    """A sweep CSV line could not be parsed."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class MissingBandError(SweepNavError):
    """Requested band has no samples anywhere in the window."""


class InsufficientAnchorsError(SweepNavError):
    """Fewer usable transmitter bands than the multilateration minimum."""


class DegenerateGeometryError(SweepNavError):
    """Anchor geometry too ill-conditioned to produce a position fix."""


class SingularGeometryError(SweepNavError):
    """Receiver and landmark coincide, so the range direction is undefined."""


class PlacementError(SweepNavError):
    """Could not place points with the required minimum separation."""


class ConfigError(SweepNavError):
    """Invalid configuration value or configuration file."""
