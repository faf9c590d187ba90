"""Exception hierarchy shared across the package."""

from __future__ import annotations


class ParisianLevyError(Exception):
    """Base class for all package errors."""


class DomainError(ParisianLevyError, ValueError):
    """An argument lies outside the domain of a function."""


class PreconditionError(ParisianLevyError, ValueError):
    """A formula was requested outside the parameter set where it holds."""


class UnsupportedOperationError(ParisianLevyError):
    """The operation does not make sense for the given model (e.g. creeping with sigma = 0)."""


class RepeatedRootError(ParisianLevyError):
    """psi(theta) = q has a repeated root, so partial fractions do not apply."""


class ConstructionError(ParisianLevyError):
    """A scale table failed its invariant checks."""


class ModelFileError(ParisianLevyError, ValueError):
    """A model file could not be parsed."""


class ConfigurationError(ParisianLevyError, ValueError):
    """Invalid simulation or CLI configuration."""
