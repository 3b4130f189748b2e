# Logarithmic Means Service for walsh-logmeans
# Noerlund kernels F_n, Riesz kernels G_n and the mixed means built from them

import itertools
import logging
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Hashable, List, Literal, Optional, Sequence, Tuple

import numpy as np

from src.core.dyadic import AxisSubset, dirichlet_samples, iter_dirichlet
from src.core.transform import DyadicFunction, WalshSpectrum, analyze, fwht, partial_sum, synthesize
from src.errors import DomainError, ResolutionExceededError, ResolutionMismatchError, ShapeError

logger = logging.getLogger(__name__)

EULER_GAMMA = 0.5772156649015329
# beyond this order l_n comes from the asymptotic expansion of the harmonic numbers
EXACT_HARMONIC_LIMIT = 1 << 20

Method = Literal["direct", "spectral"]
KernelMethod = Literal["auto", "direct", "spectral"]


class KernelKind(str, Enum):
    DIRICHLET = "D"
    NOERLUND = "F"
    RIESZ = "G"


def harmonic_l(n: int) -> float:
    """l_n = sum_{k=1}^{n-1} 1/k, so l_1 = 0."""
    if n < 1:
        raise DomainError(f"harmonic order must be at least 1, got {n}")
    if n <= EXACT_HARMONIC_LIMIT:
        return math.fsum(1.0 / k for k in range(1, n))
    m = float(n - 1)
    return math.log(m) + EULER_GAMMA + 1.0 / (2.0 * m) - 1.0 / (12.0 * m * m) + 1.0 / (120.0 * m**4)


def harmonic_table(n_max: int) -> np.ndarray:
    """table[n] = l_n for 1 <= n <= n_max; table[0] is 0."""
    if n_max < 1:
        raise DomainError(f"harmonic order must be at least 1, got {n_max}")
    table = np.zeros(n_max + 1)
    table[2:] = np.cumsum(1.0 / np.arange(1, n_max))
    return table


def _check_order(n: int, resolution: int) -> None:
    if n < 2:
        raise DomainError(f"mean order must be at least 2, got {n}")
    if resolution < 0:
        raise DomainError(f"resolution must be non-negative, got {resolution}")
    if n > (1 << resolution):
        raise ResolutionExceededError(n, resolution)


def noerlund_multipliers(n: int, resolution: int) -> np.ndarray:
    """F^_n(k) = l_{n-k} / l_n for k <= n-2 and zero otherwise."""
    _check_order(n, resolution)
    table = harmonic_table(n)
    k = np.arange(1 << resolution)
    out = np.zeros(k.size)
    valid = k <= n - 2
    out[valid] = table[n - k[valid]] / table[n]
    return out


def riesz_multipliers(n: int, resolution: int) -> np.ndarray:
    """G^_n(k) = (l_n - l_{k+1}) / l_n for k <= n-2 and zero otherwise."""
    _check_order(n, resolution)
    table = harmonic_table(n)
    k = np.arange(1 << resolution)
    out = np.zeros(k.size)
    valid = k <= n - 2
    out[valid] = (table[n] - table[k[valid] + 1]) / table[n]
    return out


def dirichlet_multipliers(n: int, resolution: int) -> np.ndarray:
    if n < 0:
        raise DomainError(f"Dirichlet order must be non-negative, got {n}")
    if n > (1 << resolution):
        raise ResolutionExceededError(n, resolution)
    return (np.arange(1 << resolution) < n).astype(np.float64)


def _direct_kernel(kind: KernelKind, n: int, resolution: int) -> np.ndarray:
    """Weighted Dirichlet sums: F_n uses D_m / (n - m), G_n uses D_m / m, both over m = 1..n-1."""
    if kind is KernelKind.DIRICHLET:
        return dirichlet_samples(n, resolution)
    acc = np.zeros(1 << resolution)
    for m, d_m in iter_dirichlet(n - 1, resolution):
        weight = 1.0 / (n - m) if kind is KernelKind.NOERLUND else 1.0 / m
        acc += weight * d_m
    return acc / harmonic_l(n)


@dataclass(frozen=True, eq=False)
class KernelProfile:
    kind: KernelKind
    order: int
    resolution: int
    samples: np.ndarray
    multipliers: np.ndarray

    @property
    def integral(self) -> float:
        return float(self.samples.mean())

    @property
    def l1_norm(self) -> float:
        return float(np.abs(self.samples).mean())


@dataclass(frozen=True)
class MeanSpec:
    """Mixed mean: Noerlund treatment on the axes in `noerlund_axes`, Riesz on the rest."""

    noerlund_axes: AxisSubset
    orders: Tuple[int, ...]

    def __post_init__(self) -> None:
        orders = tuple(int(n) for n in self.orders)
        if len(orders) != self.noerlund_axes.d:
            raise ShapeError(f"{len(orders)} orders for {self.noerlund_axes.d} axes")
        for axis, n in enumerate(orders):
            if n < 2:
                raise DomainError(f"mean order must be at least 2 on axis {axis + 1}, got {n}")
        object.__setattr__(self, "orders", orders)

    @classmethod
    def noerlund(cls, orders: Sequence[int]) -> "MeanSpec":
        return cls(AxisSubset.full(len(orders)), tuple(orders))

    @classmethod
    def riesz(cls, orders: Sequence[int]) -> "MeanSpec":
        return cls(AxisSubset.empty(len(orders)), tuple(orders))

    @classmethod
    def mixed(cls, labels: Sequence[int], orders: Sequence[int]) -> "MeanSpec":
        return cls(AxisSubset.from_labels(len(orders), labels), tuple(orders))

    @property
    def d(self) -> int:
        return self.noerlund_axes.d

    def kind_for(self, axis: int) -> KernelKind:
        return KernelKind.NOERLUND if self.noerlund_axes.contains_axis(axis) else KernelKind.RIESZ


class KernelCache:
    """LRU store of kernel data keyed by (kind, n, K, ...); concurrent readers, locked insertion."""

    def __init__(self, maxsize: int = 64) -> None:
        self.maxsize = maxsize
        self._items: "OrderedDict[Hashable, object]" = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get_or_create(self, key: Hashable, factory: Callable[[], object]) -> object:
        with self._lock:
            if key in self._items:
                self._items.move_to_end(key)
                self.hits += 1
                return self._items[key]
        value = factory()
        with self._lock:
            self.misses += 1
            self._items[key] = value
            self._items.move_to_end(key)
            while len(self._items) > self.maxsize:
                self._items.popitem(last=False)
        return value

    def __len__(self) -> int:
        return len(self._items)


class LogMeanService:
    """Kernels and mixed logarithmic means of multiple Walsh-Fourier series."""

    def __init__(self, cache_size: int = 512, direct_budget: int = 1 << 22) -> None:
        self.cache = KernelCache(cache_size)
        self.direct_budget = direct_budget

    def multipliers(self, kind: KernelKind, n: int, resolution: int) -> np.ndarray:
        kind = KernelKind(kind)
        builders = {
            KernelKind.DIRICHLET: dirichlet_multipliers,
            KernelKind.NOERLUND: noerlund_multipliers,
            KernelKind.RIESZ: riesz_multipliers,
        }
        return self.cache.get_or_create(("mult", kind, n, resolution), lambda: builders[kind](n, resolution))

    def kernel(self, kind: KernelKind, n: int, resolution: int, method: KernelMethod = "auto") -> KernelProfile:
        """Kernel samples by direct Dirichlet summation or by synthesising the multipliers."""
        kind = KernelKind(kind)
        multipliers = self.multipliers(kind, n, resolution)
        if method == "auto":
            method = "direct" if n * (1 << resolution) <= self.direct_budget else "spectral"
        if method not in ("direct", "spectral"):
            raise DomainError(f"unknown kernel method {method!r}")

        def build() -> KernelProfile:
            logger.debug("Building %s kernel n=%s K=%s by %s summation", kind.value, n, resolution, method)
            if method == "direct":
                samples = _direct_kernel(kind, n, resolution)
            else:
                samples = fwht(multipliers, "synthesize")
            return KernelProfile(kind, n, resolution, samples, multipliers)

        return self.cache.get_or_create(("kernel", kind, n, resolution, method), build)

    def kernel_f(self, n: int, resolution: int, method: KernelMethod = "auto") -> KernelProfile:
        return self.kernel(KernelKind.NOERLUND, n, resolution, method)

    def kernel_g(self, n: int, resolution: int, method: KernelMethod = "auto") -> KernelProfile:
        return self.kernel(KernelKind.RIESZ, n, resolution, method)

    def kernel_dirichlet(self, n: int, resolution: int, method: KernelMethod = "auto") -> KernelProfile:
        return self.kernel(KernelKind.DIRICHLET, n, resolution, method)

    def _check_spec(self, spec: MeanSpec, resolution: Sequence[int]) -> None:
        if spec.d != len(resolution):
            raise ShapeError(f"mean of dimension {spec.d} applied on {len(resolution)} axes")
        for axis, (n, k) in enumerate(zip(spec.orders, resolution)):
            if n > (1 << k):
                raise ResolutionExceededError(n, k, axis)

    def tensor_kernel(self, spec: MeanSpec, resolution: Sequence[int]) -> DyadicFunction:
        self._check_spec(spec, resolution)
        factors = [
            self.kernel(spec.kind_for(axis), n, k).samples
            for axis, (n, k) in enumerate(zip(spec.orders, resolution))
        ]
        return DyadicFunction.from_factors(tuple(resolution), factors)

    def multiplier_grid(self, spec: MeanSpec, resolution: Sequence[int]) -> np.ndarray:
        self._check_spec(spec, resolution)
        grid = np.ones(())
        for axis, (n, k) in enumerate(zip(spec.orders, resolution)):
            grid = np.multiply.outer(grid, self.multipliers(spec.kind_for(axis), n, k))
        return grid

    def apply_mean(
        self,
        f: DyadicFunction,
        spec: MeanSpec,
        method: Method = "spectral",
        spectrum: Optional[WalshSpectrum] = None,
    ) -> DyadicFunction:
        """(L_{n_B} o R_{n_B'})(f) by coefficient multipliers or by the weighted sum of partial sums."""
        self._check_spec(spec, f.resolution)
        if spectrum is None:
            spectrum = analyze(f)
        elif spectrum.resolution != f.resolution:
            raise ResolutionMismatchError(spectrum.resolution, f.resolution)
        if method == "spectral":
            coeffs = spectrum.coeffs * self.multiplier_grid(spec, f.resolution)
            return synthesize(WalshSpectrum(f.resolution, coeffs))
        if method == "direct":
            return self._direct_mean(f, spec, spectrum)
        raise DomainError(f"unknown mean method {method!r}")

    def _direct_mean(self, f: DyadicFunction, spec: MeanSpec, spectrum: WalshSpectrum) -> DyadicFunction:
        terms: List[List[Tuple[int, float]]] = []
        for axis, n in enumerate(spec.orders):
            if spec.kind_for(axis) is KernelKind.NOERLUND:
                terms.append([(n - i, 1.0 / i) for i in range(1, n)])
            else:
                terms.append([(i, 1.0 / i) for i in range(1, n)])
        logger.debug("Direct mean over %s partial sums", int(np.prod([len(t) for t in terms])))
        acc = np.zeros(f.shape)
        for combo in itertools.product(*terms):
            orders = tuple(order for order, _ in combo)
            weight = float(np.prod([w for _, w in combo]))
            acc += weight * partial_sum(f, orders, spectrum=spectrum).samples
        norm = float(np.prod([harmonic_l(n) for n in spec.orders]))
        return DyadicFunction(f.resolution, acc / norm)

    def apply_kernel(self, f: DyadicFunction, kind: KernelKind, n: int) -> DyadicFunction:
        """One-dimensional f * K_n for a single kernel kind, including the Dirichlet kernel."""
        if f.dims != 1:
            raise ShapeError(f"expected a one-dimensional function, got {f.dims} axes")
        multipliers = self.multipliers(KernelKind(kind), n, f.resolution[0])
        return synthesize(WalshSpectrum(f.resolution, analyze(f).coeffs * multipliers))

    def type_audit(
        self,
        functions: Sequence[DyadicFunction],
        orders: Sequence[int],
        weak_l1: Callable[[DyadicFunction], float],
    ) -> Dict[int, Tuple[float, float]]:
        """Per order n, the largest ||f*G_n||_1/||f||_1 and weakL1(f*F_n)/||f||_1 over the suite."""
        orders = list(orders)
        strong = dict.fromkeys(orders, 0.0)
        weak = dict.fromkeys(orders, 0.0)
        for f in functions:
            norm = float(np.abs(f.samples).mean())
            if norm == 0.0:
                continue
            spectrum = analyze(f)
            for n in orders:
                riesz = self.apply_mean(f, MeanSpec.riesz((n,) * f.dims), spectrum=spectrum)
                noerlund = self.apply_mean(f, MeanSpec.noerlund((n,) * f.dims), spectrum=spectrum)
                strong[n] = max(strong[n], float(np.abs(riesz.samples).mean()) / norm)
                weak[n] = max(weak[n], weak_l1(noerlund) / norm)
        logger.info(
            "Type audit over %s functions: strong %.6g weak %.6g",
            len(functions),
            max(strong.values(), default=0.0),
            max(weak.values(), default=0.0),
        )
        return {n: (strong[n], weak[n]) for n in orders}


def convolve_with_kernel(f: DyadicFunction, kernel: DyadicFunction) -> DyadicFunction:
    """(f * k)(x) = integral of f(t) k(x + t) dt by direct double summation."""
    if f.resolution != kernel.resolution:
        raise ResolutionMismatchError(f.resolution, kernel.resolution)
    ranges = [np.arange(n) for n in f.shape]
    out = np.zeros(f.shape)
    for t in np.ndindex(*f.shape):
        value = f.samples[t]
        if value == 0.0:
            continue
        out += value * kernel.samples[np.ix_(*[r ^ ti for r, ti in zip(ranges, t)])]
    return DyadicFunction(f.resolution, out / f.size)
