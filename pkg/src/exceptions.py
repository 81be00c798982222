"""Custom exceptions for the down-up chain toolkit.

This module defines a hierarchy of custom exceptions so callers can tell
malformed trees apart from bad probability inputs, violated move
preconditions and oversized exact computations.

Exception hierarchy:
    DownUpError (base)
    ├── TreeError
    │   ├── InvalidTreeError
    │   ├── TreeFormatError
    │   ├── UnknownLabelError
    │   ├── DuplicateLabelError
    │   ├── UnknownEdgeError
    │   ├── LabelUniverseError
    │   └── ProjectionRangeError
    ├── DistributionError
    │   ├── InvalidWeightError
    │   ├── InvalidDrawCountError
    │   ├── InvalidAlphaError
    │   ├── AlphaFormatError
    │   ├── InvalidPmfError
    │   └── EmptyUrnError
    ├── ChainError
    │   ├── ChainSizeError
    │   ├── MovePreconditionError
    │   └── MassConservationError
    ├── VerificationError
    │   ├── StateSpaceTooLargeError
    │   ├── NonStochasticRowError
    │   └── ShapeMismatchError
    └── ConfigurationError
        ├── SettingsConfigError
        └── SimSpecError
"""

from typing import Any


class DownUpError(Exception):
    """Base exception for all errors raised by this package.

    Catching this exception will catch all application-specific errors.
    """

    def __init__(self, message: str, details: dict[str, Any] | None = None) -> None:
        """Initialize the exception with optional details.

        Args:
            message: Human-readable error message
            details: Optional dictionary with additional error context
        """
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> dict[str, Any]:
        """Convert exception to a JSON-friendly dictionary.

        Returns:
            Dictionary with error information
        """
        return {
            "error": self.__class__.__name__,
            "message": self.message,
            "details": self.details,
        }


# Tree-related exceptions
class TreeError(DownUpError):
    """Base exception for tree construction and editing errors."""


class InvalidTreeError(TreeError):
    """Raised when an edge collection violates a tree invariant."""

    def __init__(self, invariant: str, edges: list[list[int]] | None = None) -> None:
        """Initialize with the violated invariant."""
        details: dict[str, Any] = {"invariant": invariant}
        if edges is not None:
            details["edges"] = edges[:20]
        super().__init__(f"Invalid tree: {invariant}", details)


class TreeFormatError(TreeError):
    """Raised when an encoded tree cannot be parsed."""

    def __init__(self, reason: str, position: int | None = None) -> None:
        """Initialize with the parse failure and its position."""
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"Malformed tree encoding{where}: {reason}", {"position": position})


class UnknownLabelError(TreeError):
    """Raised when a label is not a leaf of the tree."""

    def __init__(self, label: int) -> None:
        """Initialize with the missing label."""
        super().__init__(f"Label {label} is not a leaf of the tree", {"label": label})


class DuplicateLabelError(TreeError):
    """Raised when inserting a label that is already present."""

    def __init__(self, label: int) -> None:
        """Initialize with the duplicated label."""
        super().__init__(f"Label {label} is already a leaf of the tree", {"label": label})


class UnknownEdgeError(TreeError):
    """Raised when a label set is not an edge of the tree."""

    def __init__(self, edge: list[int]) -> None:
        """Initialize with the offending label set."""
        super().__init__(f"{edge} is not an edge of the tree", {"edge": edge})


class LabelUniverseError(TreeError):
    """Raised when a label falls outside the supported universe."""

    def __init__(self, label: int, max_label: int) -> None:
        """Initialize with the label and the universe bound."""
        super().__init__(
            f"Label {label} outside supported range 1..{max_label}",
            {"label": label, "max_label": max_label},
        )


class ProjectionRangeError(TreeError):
    """Raised when a projection size k is outside 1..n or a state has no preimage."""


# Distribution-related exceptions
class DistributionError(DownUpError):
    """Base exception for probability-kernel errors."""


class InvalidWeightError(DistributionError):
    """Raised when urn or Dirichlet-multinomial weights are not positive."""


class InvalidDrawCountError(DistributionError):
    """Raised when an urn is asked for a negative number of draws."""

    def __init__(self, m: int) -> None:
        """Initialize with the rejected draw count."""
        super().__init__(f"number of draws must be nonnegative, got {m}", {"m": m})


class InvalidAlphaError(DistributionError):
    """Raised when alpha lies outside the range an operation accepts."""

    def __init__(self, alpha: object, allowed: str) -> None:
        """Initialize with the rejected value and the accepted range."""
        super().__init__(
            f"alpha={alpha} outside {allowed}", {"alpha": str(alpha), "allowed": allowed}
        )


class AlphaFormatError(DistributionError):
    """Raised when alpha is not written as an exact p/q fraction."""

    def __init__(self, text: str) -> None:
        """Initialize with the rejected text."""
        super().__init__(
            f"alpha must be written as p/q, got {text!r}", {"value": text, "expected": "p/q"}
        )


class InvalidPmfError(DistributionError):
    """Raised when a probability mass function is malformed."""


class EmptyUrnError(DistributionError):
    """Raised when an urn has no colors."""


# Chain-related exceptions
class ChainError(DownUpError):
    """Base exception for Markov chain dynamics."""


class ChainSizeError(ChainError):
    """Raised when a chain is run on a state that is too small."""

    def __init__(self, size: int, minimum: int) -> None:
        """Initialize with the state size and the required minimum."""
        super().__init__(
            f"Chain requires size at least {minimum}, got {size}",
            {"size": size, "minimum": minimum},
        )


class MovePreconditionError(ChainError):
    """Raised when a decorated-tree move is applied outside its domain."""


class MassConservationError(ChainError):
    """Raised when a decorated move fails to conserve total mass."""

    def __init__(self, expected: int, actual: int, step: str) -> None:
        """Initialize with the expected and observed totals."""
        super().__init__(
            f"Mass not conserved in {step}: expected {expected}, got {actual}",
            {"expected": expected, "actual": actual, "step": step},
        )


# Verification-related exceptions
class VerificationError(DownUpError):
    """Base exception for exact-verification plumbing errors."""


class StateSpaceTooLargeError(VerificationError):
    """Raised when an exact computation exceeds the configured bound."""

    def __init__(self, what: str, size: int, bound: int) -> None:
        """Initialize with the size estimate and the bound."""
        super().__init__(
            f"{what} too large for exact computation: {size} > {bound}",
            {"what": what, "size": size, "bound": bound},
        )


class NonStochasticRowError(VerificationError):
    """Raised when a kernel row does not sum to one."""

    def __init__(self, state: str, total: object) -> None:
        """Initialize with the offending state and its row total."""
        super().__init__(
            f"Kernel row of {state} sums to {total}", {"state": state, "total": str(total)}
        )


class ShapeMismatchError(VerificationError):
    """Raised when kernels or vectors do not compose."""


# Configuration-related exceptions
class ConfigurationError(DownUpError):
    """Base exception for configuration errors."""


class SettingsConfigError(ConfigurationError):
    """Raised when an environment setting is invalid."""

    def __init__(self, invalid_var: str, value: str) -> None:
        """Initialize with invalid configuration details."""
        super().__init__(
            f"Invalid configuration: {invalid_var}",
            {"variable": invalid_var, "value": value, "expected": "positive integer"},
        )


class SimSpecError(ConfigurationError):
    """Raised when a simulation specification fails validation."""
