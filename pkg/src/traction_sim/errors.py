"""Exception types shared across the simulator."""


class GeometryError(ValueError):
    """Forceps linkage parameters are inconsistent or out of range."""


class DeformationError(ValueError):
    """Spring deformation beyond the physical travel of the sensing module."""


class SchedulingError(ValueError):
    """Gain-scheduling denominator degenerate for the requested angles."""


class AnalysisError(ValueError):
    """Malformed input to the error analytics (length mismatch, empty group)."""


class ConfigError(ValueError):
    """Invalid scenario configuration; message carries the offending field path."""


class SimulationFault(RuntimeError):
    """Non-finite state or a physical limit was hit during integration."""
