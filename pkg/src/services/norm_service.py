# Norm Service for walsh-logmeans
# L_p, weak-L1, Orlicz/Luxemburg norms and the L log^beta L functional on cell-constant functions

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from src.core.transform import DyadicFunction
from src.errors import DomainError, NumericError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Distribution:
    """Distinct absolute values of a cell-constant function and the measure each occupies."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        values = np.abs(np.asarray(self.values, dtype=np.float64)).ravel()
        weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if values.shape != weights.shape:
            raise DomainError("values and weights must have the same length")
        if np.any(weights < 0):
            raise DomainError("weights must be non-negative")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_function(cls, f: DyadicFunction) -> "Distribution":
        values, counts = np.unique(np.abs(f.samples), return_counts=True)
        return cls(values, counts / f.size)

    @classmethod
    def two_level(cls, height: float, measure: float) -> "Distribution":
        """height on a set of the given measure, zero elsewhere."""
        return cls(np.array([height, 0.0]), np.array([measure, 1.0 - measure]))

    def scaled(self, factor: float) -> "Distribution":
        return Distribution(self.values * abs(factor), self.weights)


FunctionLike = Union[DyadicFunction, Distribution]


def distribution_product(*parts: Distribution) -> Distribution:
    """Distribution of a tensor product f_1(x_1) ... f_m(x_m) from the factor distributions."""
    values = np.ones(1)
    weights = np.ones(1)
    for part in parts:
        values = np.multiply.outer(values, part.values).ravel()
        weights = np.multiply.outer(weights, part.weights).ravel()
    return Distribution(values, weights)


def as_distribution(f: FunctionLike) -> Distribution:
    return f if isinstance(f, Distribution) else Distribution.from_function(f)


class YoungFunction:
    """Convex even Q with Q(0) = 0; `log_power` is u log^beta(1+u) with the natural log.

    Every instance is spot-checked on construction: Q(0) = 0, midpoint convexity on a
    geometric grid and, for `log_power` with beta > 0, superlinear growth at 1e6 and
    sublinear decay at 1e-6.
    """

    CHECK_GRID = np.concatenate(([0.0], np.geomspace(1e-6, 1e6, 49)))
    CONVEXITY_TOL = 1e-12

    def __init__(self, evaluator: Callable[[np.ndarray], np.ndarray], name: str, beta: Optional[float] = None) -> None:
        self._evaluator = evaluator
        self.name = name
        self.beta = beta
        self.check()

    @classmethod
    def log_power(cls, beta: float) -> "YoungFunction":
        if beta < 0:
            raise DomainError(f"beta must be non-negative, got {beta}")
        beta = float(beta)
        return cls(lambda u: u * np.log1p(u) ** beta, f"u*log^{beta:g}(1+u)", beta)

    @classmethod
    def custom(cls, evaluator: Callable[[np.ndarray], np.ndarray], name: str = "custom") -> "YoungFunction":
        return cls(evaluator, name)

    def check(self) -> None:
        """Raise DomainError unless Q passes the Young function spot checks."""
        grid = self.CHECK_GRID
        values = np.broadcast_to(np.asarray(self(grid), dtype=np.float64), grid.shape)
        if abs(values[0]) > self.CONVEXITY_TOL:
            raise DomainError(f"{self.name}: Q(0) = {values[0]:g}, expected 0")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise DomainError(f"{self.name}: Q must be finite and non-negative on [0, 1e6]")
        a, b = np.meshgrid(grid, grid, indexing="ij")
        chord = (np.add.outer(values, values)) / 2.0
        midpoint = np.asarray(self((a + b) / 2.0), dtype=np.float64)
        excess = midpoint - chord
        worst = np.unravel_index(np.argmax(excess / np.maximum(1.0, chord)), excess.shape)
        if excess[worst] > self.CONVEXITY_TOL * max(1.0, chord[worst]):
            raise DomainError(
                f"{self.name}: not convex, Q(({a[worst]:g}+{b[worst]:g})/2) exceeds the chord by {excess[worst]:g}"
            )
        if self.beta:
            small, unit, large = (float(self(u)) / u for u in (1e-6, 1.0, 1e6))
            if not small < unit < large:
                raise DomainError(f"{self.name}: Q(u)/u must rise from u = 1e-6 through 1 to 1e6")
        logger.debug("Young function %s passed the spot checks", self.name)

    def __call__(self, u: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        array = np.asarray(u, dtype=np.float64)
        if np.any(array < 0):
            raise DomainError("Young functions are evaluated at non-negative arguments")
        with np.errstate(over="ignore"):
            out = self._evaluator(array)
        return float(out) if np.ndim(out) == 0 else out

    def __repr__(self) -> str:
        return f"YoungFunction({self.name})"


def young_eval(q: YoungFunction, u: float) -> float:
    return float(q(u))


def lp_norm(f: FunctionLike, p: float) -> float:
    if p < 1:
        raise DomainError(f"p must be at least 1, got {p}")
    dist = as_distribution(f)
    if math.isinf(p):
        return float(dist.values[dist.weights > 0].max(initial=0.0))
    return float(np.sum(dist.weights * dist.values**p) ** (1.0 / p))


def weak_l1(f: FunctionLike) -> float:
    """sup over lambda of lambda * mes{|f| > lambda}, attained as lambda rises to a sample value."""
    dist = as_distribution(f)
    order = np.argsort(dist.values)
    values = dist.values[order]
    tails = np.cumsum(dist.weights[order][::-1])[::-1]
    return float(np.max(values * tails, initial=0.0))


def superlevel_measure(f: FunctionLike, level: float, strict: bool = True) -> float:
    dist = as_distribution(f)
    mask = dist.values > level if strict else dist.values >= level
    return float(dist.weights[mask].sum())


def modular(f: FunctionLike, q: YoungFunction, k: float = 1.0) -> float:
    """integral of Q(|f| / k)."""
    dist = as_distribution(f)
    return float(np.sum(dist.weights * q(dist.values / k)))


def luxemburg_norm(f: FunctionLike, q: YoungFunction, max_iter: int = 200, rtol: float = 1e-10) -> float:
    """inf{k > 0 : integral Q(|f|/k) <= 1} by bisection; returns the upper end of the final bracket."""
    dist = as_distribution(f)
    support = dist.weights > 0
    if not np.any(dist.values[support] > 0):
        return 0.0
    dist = Distribution(dist.values[support], dist.weights[support])

    def inside(k: float) -> bool:
        return modular(dist, q, k) <= 1.0

    iterations = 0
    hi = 2.0 * float(dist.values.max())
    while not inside(hi):
        hi *= 2.0
        iterations += 1
        if iterations > max_iter:
            raise NumericError(f"no Luxemburg bracket for Q={q.name} after {max_iter} doublings")
    lo = hi / 2.0
    while inside(lo):
        hi, lo = lo, lo / 2.0
        iterations += 1
        if iterations > max_iter:
            raise NumericError(f"no Luxemburg bracket for Q={q.name} after {max_iter} halvings")
    for _ in range(max_iter):
        if hi - lo < rtol * (1.0 + hi):
            return hi
        mid = 0.5 * (lo + hi)
        if inside(mid):
            hi = mid
        else:
            lo = mid
    raise NumericError(f"Luxemburg bisection for Q={q.name} did not converge in {max_iter} steps")


def log_entropy(f: FunctionLike, beta: float) -> float:
    """integral of |f| (log+ |f|)^beta, log+ t = max(log t, 0); beta = 0 gives ||f||_1."""
    if beta < 0:
        raise DomainError(f"beta must be non-negative, got {beta}")
    dist = as_distribution(f)
    log_plus = np.log(np.maximum(dist.values, 1.0))
    return float(np.sum(dist.weights * dist.values * log_plus**beta))


def orlicz_upper_bound(f: FunctionLike, q: YoungFunction) -> float:
    """1 + ||Q(|f|)||_1, an upper bound for the Luxemburg norm."""
    return 1.0 + modular(f, q)


def half_doubling_bound(f: FunctionLike, q: YoungFunction) -> float:
    """(1 + ||Q(2|f|)||_1) / 2, the bound obtained by testing k = 1/2 in the convexity estimate."""
    return 0.5 * (1.0 + modular(f, q, 0.5))


def inclusion_profile(q: YoungFunction, beta: float, points: Sequence[float]) -> np.ndarray:
    """u log^beta(u) / Q(u); bounded ratios indicate Q(L) is inside L log^beta L."""
    u = np.asarray(points, dtype=np.float64)
    if np.any(u <= 1.0):
        raise DomainError("inclusion profile is sampled at points above 1")
    return u * np.log(u) ** beta / q(u)


class NormService:
    """Norm evaluation bound to the configured Luxemburg iteration limits."""

    def __init__(self, max_iter: int = 200, rtol: float = 1e-10) -> None:
        self.max_iter = max_iter
        self.rtol = rtol

    def luxemburg(self, f: FunctionLike, q: YoungFunction) -> float:
        return luxemburg_norm(f, q, max_iter=self.max_iter, rtol=self.rtol)
