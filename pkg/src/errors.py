# Error types for walsh-logmeans
# Each subclasses the builtin a caller would naturally catch

from typing import Sequence


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ShapeError(ValueError):
    """Array shape, dimension count or per-axis list length does not match."""


class ResolutionMismatchError(ValueError):
    """Two grid objects were combined at different resolutions."""

    def __init__(self, left: Sequence[int], right: Sequence[int]) -> None:
        super().__init__(f"resolution mismatch: {tuple(left)} vs {tuple(right)}")
        self.left = tuple(left)
        self.right = tuple(right)


class ResolutionExceededError(ValueError):
    """A requested order needs more binary digits than the grid carries."""

    def __init__(self, order: int, resolution: int, axis: int = 0) -> None:
        super().__init__(f"order {order} exceeds 2^{resolution} on axis {axis + 1}")
        self.order = order
        self.resolution = resolution
        self.axis = axis


class UsageError(ValueError):
    """Invalid command-line or configuration input."""


class NumericError(RuntimeError):
    """An iterative numeric routine failed to converge."""
