# Function generators for walsh-logmeans experiments
# Builtin test functions, seeded random suites and the adversarial suite for type audits

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.core.dyadic import dirichlet_power_samples, walsh_samples
from src.core.transform import DyadicFunction, load_binary, load_csv
from src.errors import DomainError, ShapeError, UsageError

logger = logging.getLogger(__name__)

ADVERSARIAL_DELTAS = (0, 1, 3, 17, 64, 128, 200, 255)
ADVERSARIAL_WALSH = (1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233)


def _floats(value: Optional[str], count: int, default: Sequence[float]) -> List[float]:
    if value is None:
        return list(default)
    parts = [float(v) for v in value.split(",") if v.strip()]
    if len(parts) == 1:
        parts = parts * count
    if len(parts) != count:
        raise UsageError(f"expected {count} comma-separated values, got {value!r}")
    return parts


def rectangle(resolution: Sequence[int], lo: Sequence[float], hi: Sequence[float]) -> DyadicFunction:
    """Indicator of the dyadic rectangle prod [lo_i, hi_i), rounded to the grid."""
    factors = []
    for k, a, b in zip(resolution, lo, hi):
        if not 0 <= a < b <= 1:
            raise DomainError(f"rectangle side [{a}, {b}) is not inside [0, 1)")
        size = 1 << k
        side = np.zeros(size)
        side[int(np.floor(a * size)) : int(np.floor(b * size))] = 1.0
        factors.append(side)
    return DyadicFunction.from_factors(tuple(resolution), factors)


def default_rectangle(d: int) -> Dict[str, List[float]]:
    lo = [0.125 if axis % 2 == 0 else 0.25 for axis in range(d)]
    return {"lo": lo, "hi": [a + 0.5 for a in lo]}


def walsh_product(resolution: Sequence[int], indices: Sequence[int]) -> DyadicFunction:
    return DyadicFunction.from_factors(tuple(resolution), [walsh_samples(k, r) for k, r in zip(indices, resolution)])


def random_step(resolution: Sequence[int], rng: np.random.Generator, level: Optional[int] = None) -> DyadicFunction:
    """Gaussian values on a coarse dyadic grid, refined to the working resolution."""
    coarse = [min(k, 3 if level is None else level) for k in resolution]
    values = rng.normal(size=tuple(1 << k for k in coarse))
    for axis, (k, c) in enumerate(zip(resolution, coarse)):
        values = np.repeat(values, 1 << (k - c), axis=axis)
    return DyadicFunction(tuple(resolution), values)


def borderline(resolution: Sequence[int], level: int) -> DyadicFunction:
    """2^(level d) on [0, 2^-level)^d: unit L1 norm concentrating on a shrinking cell."""
    if any(level > k for k in resolution):
        raise DomainError(f"level {level} exceeds the resolution {tuple(resolution)}")
    factors = [dirichlet_power_samples(level, k) for k in resolution]
    return DyadicFunction.from_factors(tuple(resolution), factors)


def build_function(
    name: str,
    resolution: Sequence[int],
    params: Optional[Dict[str, str]] = None,
    seed: int = 0,
) -> DyadicFunction:
    """Builtin test function by name; `file:PATH` loads a binary or CSV dump."""
    params = params or {}
    d = len(resolution)
    kind, _, path = name.partition(":")
    if kind == "constant":
        return DyadicFunction.constant(resolution, float(params.get("value", "1")))
    if kind == "rect":
        defaults = default_rectangle(d)
        lo = _floats(params.get("lo"), d, defaults["lo"])
        hi = _floats(params.get("hi"), d, defaults["hi"])
        return rectangle(resolution, lo, hi)
    if kind == "walsh":
        indices = [int(v) for v in _floats(params.get("index"), d, [3] * d)]
        return walsh_product(resolution, indices)
    if kind == "random-step":
        level = int(params["level"]) if "level" in params else None
        return random_step(resolution, np.random.default_rng(seed), level)
    if kind == "borderline":
        return borderline(resolution, int(params.get("level", str(min(resolution)))))
    if kind == "file":
        source = Path(path or params.get("path", ""))
        f = load_csv(source) if source.suffix == ".csv" else load_binary(source)
        if f.resolution != tuple(resolution):
            raise ShapeError(f"{source} has resolution {f.resolution}, expected {tuple(resolution)}")
        return f
    raise UsageError(f"unknown function {name!r}")


def random_suite(resolution: Sequence[int], count: int, seed: int = 0) -> List[DyadicFunction]:
    """Seeded step functions with log-normal amplitudes, random signs and random coarse levels."""
    suite = []
    for child in np.random.SeedSequence(seed).spawn(count):
        rng = np.random.default_rng(child)
        level = int(rng.integers(1, min(resolution) + 1))
        base = random_step(resolution, rng, level)
        amplitude = rng.lognormal(mean=0.0, sigma=1.5, size=base.shape)
        suite.append(DyadicFunction(base.resolution, np.sign(base.samples) * amplitude))
    return suite


def adversarial_suite(resolution: int = 8) -> List[DyadicFunction]:
    """Deterministic one-dimensional suite: cell masses, D_2^m, Walsh functions, indicators, dipoles, D differences."""
    if resolution < 8:
        raise DomainError(f"the adversarial suite needs resolution 8 or more, got {resolution}")
    size = 1 << resolution
    k = (resolution,)
    suite: List[DyadicFunction] = []
    for j in ADVERSARIAL_DELTAS:
        cell = np.zeros(size)
        cell[j] = size
        suite.append(DyadicFunction(k, cell))
    for m in range(8):
        suite.append(DyadicFunction(k, dirichlet_power_samples(m, resolution)))
    for index in ADVERSARIAL_WALSH:
        suite.append(DyadicFunction(k, walsh_samples(index, resolution)))
    for m in range(1, 9):
        indicator = np.zeros(size)
        indicator[: size >> m] = 1.0
        suite.append(DyadicFunction(k, indicator))
    for step in range(8):
        dipole = np.zeros(size)
        dipole[0] = size
        dipole[1 << step] = -size
        suite.append(DyadicFunction(k, dipole))
    for m in range(1, 7):
        difference = dirichlet_power_samples(m, resolution) - dirichlet_power_samples(m - 1, resolution)
        suite.append(DyadicFunction(k, difference))
    logger.debug("Adversarial suite of %s functions at K=%s", len(suite), resolution)
    return suite
