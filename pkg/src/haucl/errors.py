"""Exception types raised across the package."""

from __future__ import annotations


class HauclError(Exception):
    """Base class for all package errors."""


class DimensionError(HauclError, ValueError):
    """Operand shapes are incompatible."""


class DomainError(HauclError, ValueError):
    """Input lies outside an operation's mathematical domain."""


class ContractError(HauclError, RuntimeError):
    """An API precondition on call order or arguments was violated."""


class ParameterError(HauclError, ValueError):
    """A configuration or hyperparameter value is out of range."""


class EmptyDialogueError(HauclError, ValueError):
    """A dialogue with zero utterances was supplied."""


class DataError(HauclError, ValueError):
    """A dataset file could not be parsed or failed validation."""


class CheckpointError(HauclError, ValueError):
    """A checkpoint could not be read."""


class CheckpointVersionError(CheckpointError):
    """The checkpoint header magic is unknown."""


class CheckpointCorruptionError(CheckpointError):
    """The checkpoint manifest and blob disagree."""


class DivergenceError(HauclError, ArithmeticError):
    """Training produced a non-finite loss."""
