# Dyadic group arithmetic for walsh-logmeans
# Grid points, dyadic addition, Rademacher and Paley-ordered Walsh functions

"""Exact arithmetic on the dyadic group [0,1)^d at a finite binary resolution.

A coordinate at resolution K is the integer c with x = c / 2^K. Its n-th binary
digit (n = 0 is the first digit after the point) is bit K-1-n of c, and every
digit beyond the resolution is zero. Dyadic addition is digitwise addition
mod 2, which on integer coordinates is XOR.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence, Tuple, Union

import numpy as np

from src.errors import DomainError, ResolutionMismatchError, ShapeError

logger = logging.getLogger(__name__)

MAX_WALSH_INDEX = (1 << 64) - 1

Number = Union[int, float, Fraction]


@dataclass(frozen=True)
class DyadicPoint:
    """A point of [0,1)^d whose coordinates are integers at per-axis resolution K_i."""

    coords: Tuple[int, ...]
    resolution: Tuple[int, ...]

    def __post_init__(self) -> None:
        coords = tuple(int(c) for c in self.coords)
        resolution = tuple(int(k) for k in self.resolution)
        if len(coords) != len(resolution):
            raise ShapeError(f"{len(coords)} coordinates given for {len(resolution)} axes")
        if not coords:
            raise ShapeError("a dyadic point needs at least one axis")
        for axis, (c, k) in enumerate(zip(coords, resolution)):
            if k < 0:
                raise DomainError(f"resolution must be non-negative on axis {axis + 1}, got {k}")
            if not 0 <= c < (1 << k):
                raise DomainError(f"coordinate {c} outside [0, 2^{k}) on axis {axis + 1}")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "resolution", resolution)

    @classmethod
    def from_fraction(cls, x: Union[Number, Sequence[Number]], resolution: Union[int, Sequence[int]]) -> "DyadicPoint":
        """Round each coordinate down to the grid, e.g. from_fraction(0.3, 10) has c = 307."""
        values = list(x) if isinstance(x, (list, tuple)) else [x]
        ks = list(resolution) if isinstance(resolution, (list, tuple)) else [resolution] * len(values)
        coords = []
        for value, k in zip(values, ks):
            value = Fraction(value)
            if not 0 <= value < 1:
                raise DomainError(f"coordinate {value} outside [0, 1)")
            coords.append(math.floor(value * (1 << int(k))))
        return cls(tuple(coords), tuple(ks))

    @classmethod
    def origin(cls, resolution: Sequence[int]) -> "DyadicPoint":
        return cls(tuple(0 for _ in resolution), tuple(resolution))

    @property
    def dims(self) -> int:
        return len(self.coords)

    def as_fraction(self) -> Tuple[Fraction, ...]:
        return tuple(Fraction(c, 1 << k) for c, k in zip(self.coords, self.resolution))

    def digit(self, n: int, axis: int = 0) -> int:
        """Binary digit n of the coordinate on `axis`; zero beyond the resolution."""
        if n < 0:
            raise DomainError(f"digit index must be non-negative, got {n}")
        k = self.resolution[axis]
        if n >= k:
            return 0
        return (self.coords[axis] >> (k - 1 - n)) & 1


@dataclass(frozen=True)
class AxisSubset:
    """A subset B of the 1-based axis labels {1, ..., d}."""

    d: int
    members: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.d < 1:
            raise DomainError(f"dimension must be at least 1, got {self.d}")
        members = tuple(int(m) for m in self.members)
        if any(b <= a for a, b in zip(members, members[1:])):
            raise DomainError(f"axis labels must be strictly increasing, got {members}")
        for m in members:
            if not 1 <= m <= self.d:
                raise DomainError(f"axis label {m} outside 1..{self.d}")
        object.__setattr__(self, "members", members)

    @classmethod
    def from_labels(cls, d: int, labels: Sequence[int]) -> "AxisSubset":
        return cls(d, tuple(sorted(set(int(v) for v in labels))))

    @classmethod
    def full(cls, d: int) -> "AxisSubset":
        return cls(d, tuple(range(1, d + 1)))

    @classmethod
    def empty(cls, d: int) -> "AxisSubset":
        return cls(d, ())

    @property
    def size(self) -> int:
        return len(self.members)

    def __contains__(self, label: object) -> bool:
        return label in self.members

    def contains_axis(self, axis: int) -> bool:
        """Membership by 0-based axis index."""
        return (axis + 1) in self.members

    def complement(self) -> "AxisSubset":
        return AxisSubset(self.d, tuple(i for i in range(1, self.d + 1) if i not in self.members))


def dyadic_add(x: DyadicPoint, y: DyadicPoint) -> DyadicPoint:
    """Digitwise sum mod 2; the group is its own inverse so x - y = x + y."""
    if x.resolution != y.resolution:
        raise ResolutionMismatchError(x.resolution, y.resolution)
    return DyadicPoint(tuple(a ^ b for a, b in zip(x.coords, y.coords)), x.resolution)


def _single_axis(x: DyadicPoint) -> Tuple[int, int]:
    if x.dims != 1:
        raise ShapeError(f"expected a one-dimensional point, got {x.dims} axes")
    return x.coords[0], x.resolution[0]


def _bit_reverse(value: int, width: int) -> int:
    out = 0
    for _ in range(width):
        out = (out << 1) | (value & 1)
        value >>= 1
    return out


def rademacher(n: int, x: DyadicPoint) -> int:
    """r_n(x) = (-1)^{x_n}; equals 1 once n reaches the resolution."""
    if n < 0:
        raise DomainError(f"Rademacher index must be non-negative, got {n}")
    _single_axis(x)
    return 1 - 2 * x.digit(n)


def walsh(n: int, x: DyadicPoint) -> int:
    """Paley-ordered w_n(x) = prod_k r_k(x)^{n_k}."""
    if not 0 <= n <= MAX_WALSH_INDEX:
        raise DomainError(f"Walsh index must lie in [0, 2^64), got {n}")
    c, k = _single_axis(x)
    digits = _bit_reverse(c, k)
    return -1 if bin(n & digits).count("1") % 2 else 1


def dirichlet_power(m: int, x: DyadicPoint) -> int:
    """D_{2^m}(x): 2^m on [0, 2^-m) and zero elsewhere."""
    if m < 0:
        raise DomainError(f"exponent must be non-negative, got {m}")
    c, k = _single_axis(x)
    leading = min(m, k)
    return (1 << m) if (c >> (k - leading)) == 0 else 0


def dirichlet(n: int, x: DyadicPoint) -> int:
    """D_n(x) = sum_{k<n} w_k(x), accumulated term by term."""
    if n < 0:
        raise DomainError(f"Dirichlet order must be non-negative, got {n}")
    _single_axis(x)
    return sum(walsh(k, x) for k in range(n))


def paley_dirichlet(n: int, x: DyadicPoint) -> int:
    """D_n(x) = w_n(x) sum_j n_j r_j(x) D_{2^j}(x), using the binary digits n_j of n."""
    if n < 0:
        raise DomainError(f"Dirichlet order must be non-negative, got {n}")
    if n == 0:
        return 0
    total = 0
    for j in range(n.bit_length()):
        if (n >> j) & 1:
            total += rademacher(j, x) * dirichlet_power(j, x)
    return walsh(n, x) * total


# vectorised helpers on the full grid of 2^K left endpoints


def bit_reverse_indices(resolution: int) -> np.ndarray:
    """Permutation j -> bit reversal of j over `resolution` bits."""
    if resolution < 0:
        raise DomainError(f"resolution must be non-negative, got {resolution}")
    idx = np.arange(1 << resolution, dtype=np.int64)
    rev = np.zeros_like(idx)
    for b in range(resolution):
        rev |= ((idx >> b) & 1) << (resolution - 1 - b)
    return rev


def parity(values: np.ndarray) -> np.ndarray:
    """Popcount mod 2 of non-negative integers, elementwise."""
    v = np.asarray(values).astype(np.uint64)
    for shift in (32, 16, 8, 4, 2, 1):
        v = v ^ (v >> np.uint64(shift))
    return (v & np.uint64(1)).astype(np.int64)


def rademacher_samples(n: int, resolution: int) -> np.ndarray:
    if n < 0:
        raise DomainError(f"Rademacher index must be non-negative, got {n}")
    size = 1 << resolution
    if n >= resolution:
        return np.ones(size)
    digits = (np.arange(size, dtype=np.int64) >> (resolution - 1 - n)) & 1
    return 1.0 - 2.0 * digits


def walsh_samples(k: int, resolution: int) -> np.ndarray:
    """w_k on the grid; digits of k at or beyond the resolution act as r = 1."""
    if not 0 <= k <= MAX_WALSH_INDEX:
        raise DomainError(f"Walsh index must lie in [0, 2^64), got {k}")
    rev = bit_reverse_indices(resolution).astype(np.uint64)
    return 1.0 - 2.0 * parity(np.uint64(k) & rev)


def iter_dirichlet(n: int, resolution: int) -> Iterator[Tuple[int, np.ndarray]]:
    """Yield (m, D_m) on the grid for m = 1..n.

    Consecutive Walsh functions differ by w_m = w_{m-1} r_0 ... r_t with t the
    number of trailing zeros of m, so each step costs one multiplication. The
    yielded array is updated in place by the next step.
    """
    size = 1 << resolution
    if resolution > 0:
        prefix = np.cumprod(np.stack([rademacher_samples(b, resolution) for b in range(resolution)]), axis=0)
    else:
        prefix = np.ones((1, size))
    current = np.ones(size)
    total = np.zeros(size)
    for m in range(1, n + 1):
        total += current
        yield m, total
        t = (m & -m).bit_length() - 1
        current = current * prefix[min(t, prefix.shape[0] - 1)]


def dirichlet_samples(n: int, resolution: int) -> np.ndarray:
    if n < 0:
        raise DomainError(f"Dirichlet order must be non-negative, got {n}")
    out = np.zeros(1 << resolution)
    for _, d_m in iter_dirichlet(n, resolution):
        out = d_m
    return np.array(out, copy=True)


def dirichlet_power_samples(m: int, resolution: int) -> np.ndarray:
    if m < 0:
        raise DomainError(f"exponent must be non-negative, got {m}")
    size = 1 << resolution
    cells = 1 << (resolution - min(m, resolution))
    out = np.zeros(size)
    out[:cells] = float(1 << m)
    return out
