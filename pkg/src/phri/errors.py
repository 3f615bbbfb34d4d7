"""Exception types shared across the package."""


class PhriError(Exception):
    """Base class for all package errors."""


class ZeroQuaternion(PhriError):
    """Quaternion norm too small to normalize."""


class NonUnitAxis(PhriError):
    """Rotation axis deviates from unit norm beyond tolerance."""


class NearSingular(PhriError):
    """Jacobian too close to a kinematic singularity (cond(J J^T) > 1e8)."""


class IllConditionedInertia(PhriError):
    """Joint-space inertia matrix condition number exceeds 1e10."""


class NoContact(PhriError):
    """Wrench-based alignment requested while measured force is below threshold."""


class BasinViolation(PhriError):
    """Initial attitude error outside the local exponential-stability basin."""


class WindowOutOfRange(PhriError):
    """Requested analysis window lies outside the logged time range."""


class ConfigError(PhriError):
    """Scenario configuration failed validation."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field '{field}': {message}")
