# Walsh-Fourier transform for walsh-logmeans
# Paley-ordered fast Walsh-Hadamard analysis/synthesis and rectangular partial sums

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Literal, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.dyadic import DyadicPoint, bit_reverse_indices
from src.errors import DomainError, ResolutionExceededError, ResolutionMismatchError, ShapeError

logger = logging.getLogger(__name__)

Direction = Literal["analyze", "synthesize"]

_HEADER_ALIGN = 16


def _grid_shape(resolution: Sequence[int]) -> Tuple[int, ...]:
    return tuple(1 << int(k) for k in resolution)


def _check_samples(resolution: Tuple[int, ...], samples: np.ndarray) -> np.ndarray:
    if not resolution:
        raise ShapeError("at least one axis is required")
    if any(k < 0 for k in resolution):
        raise DomainError(f"resolution must be non-negative, got {resolution}")
    array = np.asarray(samples, dtype=np.float64)
    if array.shape != _grid_shape(resolution):
        raise ShapeError(f"samples of shape {array.shape} do not match resolution {resolution}")
    return array


@dataclass(frozen=True, eq=False)
class DyadicFunction:
    """A function on [0,1)^d that is constant on every cell of the 2^K_1 x ... x 2^K_d grid."""

    resolution: Tuple[int, ...]
    samples: np.ndarray

    def __post_init__(self) -> None:
        resolution = tuple(int(k) for k in self.resolution)
        object.__setattr__(self, "resolution", resolution)
        object.__setattr__(self, "samples", _check_samples(resolution, self.samples))

    @classmethod
    def constant(cls, resolution: Sequence[int], value: float) -> "DyadicFunction":
        return cls(tuple(resolution), np.full(_grid_shape(resolution), float(value)))

    @classmethod
    def zeros(cls, resolution: Sequence[int]) -> "DyadicFunction":
        return cls.constant(resolution, 0.0)

    @classmethod
    def from_callable(cls, resolution: Sequence[int], fn: Callable[..., np.ndarray]) -> "DyadicFunction":
        """Sample fn at the left endpoints of the cells; fn receives one coordinate array per axis."""
        axes = [np.arange(n) / n for n in _grid_shape(resolution)]
        grids = np.meshgrid(*axes, indexing="ij")
        values = np.broadcast_to(np.asarray(fn(*grids), dtype=np.float64), _grid_shape(resolution))
        return cls(tuple(resolution), np.array(values))

    @classmethod
    def from_factors(cls, resolution: Sequence[int], factors: Sequence[np.ndarray]) -> "DyadicFunction":
        """Tensor product of one-dimensional sample vectors."""
        if len(factors) != len(resolution):
            raise ShapeError(f"{len(factors)} factors for {len(resolution)} axes")
        out = np.ones(())
        for factor in factors:
            out = np.multiply.outer(out, np.asarray(factor, dtype=np.float64))
        return cls(tuple(resolution), out)

    @property
    def dims(self) -> int:
        return len(self.resolution)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.samples.shape

    @property
    def size(self) -> int:
        return int(self.samples.size)

    def integral(self) -> float:
        return float(self.samples.mean())

    def support_measure(self) -> float:
        return float(np.count_nonzero(self.samples)) / self.size

    def same_grid(self, other: "DyadicFunction") -> None:
        if self.resolution != other.resolution:
            raise ResolutionMismatchError(self.resolution, other.resolution)

    def __add__(self, other: "DyadicFunction") -> "DyadicFunction":
        self.same_grid(other)
        return DyadicFunction(self.resolution, self.samples + other.samples)

    def __sub__(self, other: "DyadicFunction") -> "DyadicFunction":
        self.same_grid(other)
        return DyadicFunction(self.resolution, self.samples - other.samples)

    def __mul__(self, other: Union[float, "DyadicFunction"]) -> "DyadicFunction":
        if isinstance(other, DyadicFunction):
            self.same_grid(other)
            return DyadicFunction(self.resolution, self.samples * other.samples)
        return DyadicFunction(self.resolution, self.samples * float(other))

    __rmul__ = __mul__

    def __neg__(self) -> "DyadicFunction":
        return DyadicFunction(self.resolution, -self.samples)


@dataclass(frozen=True, eq=False)
class WalshSpectrum:
    """Paley-ordered Walsh-Fourier coefficients f^(j_1, ..., j_d) for j_i < 2^K_i."""

    resolution: Tuple[int, ...]
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        resolution = tuple(int(k) for k in self.resolution)
        object.__setattr__(self, "resolution", resolution)
        object.__setattr__(self, "coeffs", _check_samples(resolution, self.coeffs))

    @property
    def dims(self) -> int:
        return len(self.resolution)

    def coefficient(self, *index: int) -> float:
        return float(self.coeffs[index])


def _hadamard(values: np.ndarray, axis: int) -> np.ndarray:
    """Unnormalised Walsh-Hadamard butterflies along one axis."""
    x = np.moveaxis(np.array(values, dtype=np.float64, copy=True), axis, -1)
    lead = x.shape[:-1]
    n = x.shape[-1]
    h = 1
    while h < n:
        x = x.reshape(lead + (n // (2 * h), 2, h))
        a = x[..., 0, :]
        b = x[..., 1, :]
        x = np.stack((a + b, a - b), axis=-2)
        h *= 2
    return np.moveaxis(x.reshape(lead + (n,)), -1, axis)


def fwht(values: np.ndarray, direction: Direction = "analyze", axis: int = -1) -> np.ndarray:
    """Paley-ordered transform along `axis`.

    analyze gives f^(k) = 2^-K sum_j f(j/2^K) w_k(j/2^K); synthesize is its exact
    inverse with no normalisation.
    """
    array = np.asarray(values, dtype=np.float64)
    if array.ndim == 0:
        raise ShapeError("fwht needs at least one axis")
    n = array.shape[axis]
    if n < 1 or n & (n - 1):
        raise ShapeError(f"transform length must be a power of two, got {n}")
    resolution = n.bit_length() - 1
    rev = bit_reverse_indices(resolution)
    if direction == "analyze":
        return _hadamard(np.take(array, rev, axis=axis), axis) / n
    if direction == "synthesize":
        return np.take(_hadamard(array, axis), rev, axis=axis)
    raise DomainError(f"unknown transform direction {direction!r}")


def analyze(f: DyadicFunction) -> WalshSpectrum:
    coeffs = f.samples
    for axis in range(f.dims):
        coeffs = fwht(coeffs, "analyze", axis)
    return WalshSpectrum(f.resolution, coeffs)


def synthesize(spectrum: WalshSpectrum) -> DyadicFunction:
    samples = spectrum.coeffs
    for axis in range(spectrum.dims):
        samples = fwht(samples, "synthesize", axis)
    return DyadicFunction(spectrum.resolution, samples)


def _check_orders(resolution: Tuple[int, ...], orders: Sequence[int]) -> Tuple[int, ...]:
    orders = tuple(int(n) for n in orders)
    if len(orders) != len(resolution):
        raise ShapeError(f"{len(orders)} orders for {len(resolution)} axes")
    for axis, (n, k) in enumerate(zip(orders, resolution)):
        if n < 0:
            raise DomainError(f"order must be non-negative on axis {axis + 1}, got {n}")
        if n > (1 << k):
            raise ResolutionExceededError(n, k, axis)
    return orders


def truncate(spectrum: WalshSpectrum, orders: Sequence[int]) -> WalshSpectrum:
    """Keep coefficients with j_i < N_i on every axis."""
    orders = _check_orders(spectrum.resolution, orders)
    kept = np.zeros_like(spectrum.coeffs)
    window = tuple(slice(0, n) for n in orders)
    kept[window] = spectrum.coeffs[window]
    return WalshSpectrum(spectrum.resolution, kept)


def partial_sum(f: DyadicFunction, orders: Sequence[int], spectrum: Optional[WalshSpectrum] = None) -> DyadicFunction:
    """Rectangular partial sum S_N(f); any N_i = 0 gives the zero function."""
    orders = _check_orders(f.resolution, orders)
    if spectrum is None:
        spectrum = analyze(f)
    elif spectrum.resolution != f.resolution:
        raise ResolutionMismatchError(spectrum.resolution, f.resolution)
    if any(n == 0 for n in orders):
        return DyadicFunction.zeros(f.resolution)
    return synthesize(truncate(spectrum, orders))


def translate(f: DyadicFunction, shift: Union[DyadicPoint, Sequence[int]]) -> DyadicFunction:
    """g(x) = f(x + E) with dyadic addition."""
    if isinstance(shift, DyadicPoint):
        if shift.resolution != f.resolution:
            raise ResolutionMismatchError(shift.resolution, f.resolution)
        coords = shift.coords
    else:
        coords = tuple(int(c) for c in shift)
        if len(coords) != f.dims:
            raise ShapeError(f"shift has {len(coords)} coordinates for {f.dims} axes")
    index = [np.arange(n) ^ c for n, c in zip(f.shape, coords)]
    return DyadicFunction(f.resolution, f.samples[np.ix_(*index)])


def save_binary(f: DyadicFunction, path: Union[str, Path]) -> Path:
    """Write a little-endian header (d, K_1..K_d as uint32, zero-padded to 16 bytes) then float64 samples."""
    target = Path(path)
    words = [f.dims, *f.resolution]
    padded = -(-len(words) * 4 // _HEADER_ALIGN) * _HEADER_ALIGN // 4
    header = np.zeros(padded, dtype="<u4")
    header[: len(words)] = words
    with target.open("wb") as handle:
        handle.write(header.tobytes())
        handle.write(np.ascontiguousarray(f.samples, dtype="<f8").tobytes())
    logger.debug("Wrote %s samples to %s", f.size, target)
    return target


def load_binary(path: Union[str, Path]) -> DyadicFunction:
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise ShapeError(f"{path} is too short for a header")
    dims = int(np.frombuffer(raw[:4], dtype="<u4")[0])
    padded = -(-(dims + 1) * 4 // _HEADER_ALIGN) * _HEADER_ALIGN
    if dims < 1 or len(raw) < padded:
        raise ShapeError(f"{path} has a malformed header")
    resolution = tuple(int(k) for k in np.frombuffer(raw[4 : 4 * (dims + 1)], dtype="<u4"))
    samples = np.frombuffer(raw[padded:], dtype="<f8")
    expected = int(np.prod(_grid_shape(resolution)))
    if samples.size != expected:
        raise ShapeError(f"{path} holds {samples.size} samples, expected {expected}")
    return DyadicFunction(resolution, samples.reshape(_grid_shape(resolution)).astype(np.float64))


def export_csv(f: DyadicFunction, path: Union[str, Path], precision: int = 17) -> Path:
    """One row per cell: the d integer cell indices then the value."""
    target = Path(path)
    with target.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([f"i{axis + 1}" for axis in range(f.dims)] + ["value"])
        for index in np.ndindex(*f.shape):
            writer.writerow([*index, f"{f.samples[index]:.{precision}g}"])
    return target


def load_csv(path: Union[str, Path]) -> DyadicFunction:
    with Path(path).open(newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        raise ShapeError(f"{path} is empty")
    dims = len(rows[0]) - 1
    body = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=np.float64)
    if dims < 1 or body.ndim != 2 or body.shape[1] != dims + 1:
        raise ShapeError(f"{path} does not hold index columns followed by a value column")
    index = body[:, :dims].astype(np.int64)
    shape = tuple(int(v) + 1 for v in index.max(axis=0))
    if any(n & (n - 1) for n in shape):
        raise ShapeError(f"grid extent {shape} is not a power of two on every axis")
    samples = np.zeros(shape)
    samples[tuple(index.T)] = body[:, dims]
    return DyadicFunction(tuple(n.bit_length() - 1 for n in shape), samples)
