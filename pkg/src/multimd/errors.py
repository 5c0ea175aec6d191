"""Shared exception types."""


class MultiMdError(Exception):
    """Base class for all package errors."""


class ShapeError(MultiMdError):
    """Dimension mismatch between tensors or against a manifest."""


class NumericError(MultiMdError):
    """Non-finite or otherwise invalid numeric input."""


class LabelError(MultiMdError):
    """Label outside {0, 1}."""


class StateError(MultiMdError):
    """Operation called in the wrong order (e.g. backward before forward)."""


class DatasetError(MultiMdError):
    """Dataset parsing, validation, balancing or fold-planning failure."""


class ConfigError(MultiMdError):
    """Invalid configuration value."""
