"""
Custom exceptions for the OFDMA downlink simulator.

This module defines the exception types used throughout the simulator to
report configuration problems, invalid numeric inputs, solver failures and
broken per-frame resource budgets.
"""


class SimulatorError(Exception):
    """Base exception for all simulator errors"""

    def __init__(self, message: str, error_code: str = None, details: dict = None):
        super().__init__(message)
        self.error_code = error_code
        self.details = details or {}


class ConfigurationError(SimulatorError):
    """Raised when a scenario file or configuration value is unusable"""

    def __init__(self, message: str, config_key: str = None):
        super().__init__(message, "CONFIG_ERROR")
        self.config_key = config_key


class ValidationError(SimulatorError):
    """Raised when an input value violates a precondition"""

    def __init__(self, field: str, value, reason: str = None):
        message = f"Validation failed for field '{field}' with value '{value}'"
        if reason:
            message += f": {reason}"
        super().__init__(message, "VALIDATION_ERROR")
        self.field = field
        self.value = value
        self.reason = reason


class ConservationError(SimulatorError):
    """Raised when a frame allocation breaks a budget, the subchannel lattice or an MCS threshold"""

    def __init__(self, frame: int, resource: str, total: float, budget: float):
        super().__init__(
            f"Frame {frame}: {resource} {total:.12g} violates its limit {budget:.12g}",
            "CONSERVATION_VIOLATED",
            {"frame": frame, "resource": resource, "total": total, "budget": budget},
        )
        self.frame = frame
        self.resource = resource
        self.total = total
        self.budget = budget


class SweepPointError(SimulatorError):
    """Raised when one point of a parameter sweep fails"""

    def __init__(self, axis: str, value, scheduler: str, message: str):
        super().__init__(
            f"Sweep point {axis}={value} ({scheduler}) failed: {message}",
            "SWEEP_POINT_FAILED",
        )
        self.axis = axis
        self.value = value
        self.scheduler = scheduler
        self.original_message = message
