# Counterexample Service for walsh-logmeans
# Divergence machinery: p_n orders, Omega_n regions, kernel scans, test functions and signed translates

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.dyadic import AxisSubset, DyadicPoint, dirichlet_power_samples
from src.core.transform import DyadicFunction, translate
from src.errors import DomainError, ResolutionExceededError, ResolutionMismatchError, ShapeError
from src.schemas import (
    BandScan,
    Cond1Row,
    Est1Row,
    GrowthRow,
    IntervalReport,
    LemmaScanReport,
    OperatorBoundRow,
    RegionReport,
    SearchReport,
    XiReport,
)
from src.services.logmeans_service import LogMeanService, MeanSpec, harmonic_l
from src.services.norm_service import (
    Distribution,
    NormService,
    YoungFunction,
    distribution_product,
    half_doubling_bound,
    superlevel_measure,
)

logger = logging.getLogger(__name__)

MAX_P_INDEX = 31


def p_seq(n: int) -> int:
    """p_n = 4^n + 4^(n-1) + ... + 1 = (4^(n+1) - 1) / 3."""
    if not 0 <= n <= MAX_P_INDEX:
        raise DomainError(f"p_n is defined here for 0 <= n <= {MAX_P_INDEX}, got {n}")
    return ((1 << (2 * n + 2)) - 1) // 3


def tilde_m(m: int, divisor: float = 16.0, offset: float = 32768.0) -> int:
    """floor(l_{p_{m*} - 1} / divisor - offset) with m* = floor(m / 2); negative at every reachable m."""
    if m < 2:
        raise DomainError(f"m must be at least 2, got {m}")
    m_star = m // 2
    return math.floor(harmonic_l(p_seq(m_star) - 1) / divisor - offset)


def faithful_threshold(divisor: float = 16.0, offset: float = 32768.0) -> Dict[str, float]:
    """Size of p_{m*} needed before tilde_m exceeds 1; reported, never iterated towards."""
    required = divisor * (offset + 2.0)
    log2_p = (required - 0.5772156649015329) / math.log(2.0)
    return {"required_harmonic": required, "log2_p": log2_p, "m_star": log2_p / 2.0}


def proof_scale_r(n: int, axes: AxisSubset) -> int:
    b = axes.size
    if b < 1:
        raise DomainError("the translate count needs at least one Noerlund axis")
    return math.ceil(2 ** (n * (2 * b - 1)) / n ** (b - 1))


@dataclass(frozen=True)
class BandInterval:
    m: int
    start: Fraction
    end: Fraction
    tilde: Optional[int]

    @property
    def empty(self) -> bool:
        return self.start >= self.end

    def grid_range(self, resolution: int) -> Tuple[int, int]:
        """Indices j with j / 2^K inside [start, end)."""
        size = 1 << resolution
        lo = min(max(math.ceil(self.start * size), 0), size)
        hi = min(max(math.ceil(self.end * size), 0), size)
        return lo, max(lo, hi)

    def report(self) -> IntervalReport:
        return IntervalReport(m=self.m, tilde=self.tilde, start=str(self.start), end=str(self.end), empty=self.empty)


@dataclass(frozen=True)
class OmegaRegion:
    n: int
    intervals: Tuple[BandInterval, ...]
    tilde_override: Optional[int] = None

    @property
    def mode(self) -> str:
        return "faithful" if self.tilde_override is None else "override"

    @property
    def empty(self) -> bool:
        return all(interval.empty for interval in self.intervals)

    def mask(self, resolution: int) -> np.ndarray:
        out = np.zeros(1 << resolution, dtype=bool)
        for interval in self.intervals:
            if not interval.empty:
                lo, hi = interval.grid_range(resolution)
                out[lo:hi] = True
        return out


@dataclass(frozen=True)
class TranslateConfig:
    translations: Tuple[DyadicPoint, ...]
    signs: Tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.translations) != len(self.signs):
            raise ShapeError(f"{len(self.translations)} translations but {len(self.signs)} signs")
        if any(s not in (-1, 1) for s in self.signs):
            raise DomainError(f"signs must be +1 or -1, got {self.signs}")
        resolutions = {t.resolution for t in self.translations}
        if len(resolutions) > 1:
            first, second = sorted(resolutions)[:2]
            raise ResolutionMismatchError(first, second)

    @property
    def r(self) -> int:
        return len(self.signs)

    @classmethod
    def single(cls, resolution: Sequence[int]) -> "TranslateConfig":
        return cls((DyadicPoint.origin(resolution),), (1,))

    @classmethod
    def random(cls, rng: np.random.Generator, r: int, resolution: Sequence[int]) -> "TranslateConfig":
        coords = np.stack([rng.integers(0, 1 << k, size=r) for k in resolution], axis=1)
        signs = rng.choice(np.array([-1, 1]), size=r)
        points = tuple(DyadicPoint(tuple(int(c) for c in row), tuple(resolution)) for row in coords)
        return cls(points, tuple(int(s) for s in signs))


@dataclass(eq=False)
class XiConstruction:
    xi: DyadicFunction
    m: DyadicFunction
    nu: float
    report: XiReport


@dataclass
class SearchResult:
    config: Optional[TranslateConfig]
    measure: float
    report: SearchReport
    measures: List[float] = field(default_factory=list)


class CounterexampleService:
    """Computations behind the divergence results for Noerlund and mixed logarithmic means."""

    def __init__(
        self,
        log_means: LogMeanService,
        norms: Optional[NormService] = None,
        divisor: float = 16.0,
        offset: float = 32768.0,
        est1_constant: float = 0.25,
    ) -> None:
        self.log_means = log_means
        self.norms = norms or NormService()
        self.divisor = divisor
        self.offset = offset
        self.est1_constant = est1_constant

    # regions

    def omega_region(self, n: int, tilde_override: Optional[int] = None) -> OmegaRegion:
        """Bands [2^-(m+1) + 2^-(m+tilde), 2^-m) for m = n..2n."""
        if n < 1:
            raise DomainError(f"n must be at least 1, got {n}")
        if tilde_override is not None and tilde_override < 1:
            raise DomainError(f"tilde override must be a positive integer, got {tilde_override}")
        intervals = []
        for m in range(n, 2 * n + 1):
            tilde = tilde_override
            if tilde is None and m >= 2:
                tilde = tilde_m(m, self.divisor, self.offset)
            end = Fraction(1, 1 << m)
            if tilde is None:
                intervals.append(BandInterval(m, end, end, None))
                continue
            start = Fraction(1, 1 << (m + 1)) + Fraction(2) ** (-(m + tilde))
            intervals.append(BandInterval(m, start, end, tilde))
        region = OmegaRegion(n, tuple(intervals), tilde_override)
        if region.empty:
            logger.warning("Omega_%s is empty in %s mode", n, region.mode)
        return region

    def exceptional_intervals(
        self, n: int, tilde_override: Optional[int] = None
    ) -> Tuple[Optional[int], List[BandInterval]]:
        """J_m = [2^-(m+1), 2^-(m+1) + 2^-(m+tilde)) for m = n..2n with tilde > 1, and the first such m."""
        if n < 1:
            raise DomainError(f"n must be at least 1, got {n}")
        intervals = []
        start_m = None
        for m in range(max(n, 2), 2 * n + 1):
            tilde = tilde_override if tilde_override is not None else tilde_m(m, self.divisor, self.offset)
            if tilde <= 1:
                continue
            start_m = m if start_m is None else start_m
            lo = Fraction(1, 1 << (m + 1))
            intervals.append(BandInterval(m, lo, lo + Fraction(1, 1 << (m + tilde)), tilde))
        return start_m, intervals

    def region_report(self, n: int, tilde_override: Optional[int] = None) -> RegionReport:
        region = self.omega_region(n, tilde_override)
        start_m, exceptional = self.exceptional_intervals(n, tilde_override)
        return RegionReport(
            n=n,
            mode=region.mode,
            omega=[interval.report() for interval in region.intervals],
            exceptional=[interval.report() for interval in exceptional],
            exceptional_start=start_m,
            threshold=faithful_threshold(self.divisor, self.offset),
        )

    def lemma_gg_scan(self, n: int, resolution: int, region: OmegaRegion) -> LemmaScanReport:
        """Minimum of x |F_{p_n}(x)| over the grid points of the region, per band and overall."""
        p = p_seq(n)
        if p > (1 << resolution):
            raise ResolutionExceededError(p, resolution)
        report = LemmaScanReport(n=n, K=resolution, mode=region.mode, tilde=region.tilde_override)
        if region.empty:
            report.empty = True
            return report
        samples = self.log_means.kernel_f(p, resolution).samples
        size = 1 << resolution
        for interval in region.intervals:
            lo, hi = (0, 0) if interval.empty else interval.grid_range(resolution)
            band = BandScan(m=interval.m, start=float(interval.start), end=float(interval.end), points=hi - lo)
            if hi > lo:
                index = np.arange(lo, hi)
                values = index / size * np.abs(samples[lo:hi])
                best = int(np.argmin(values))
                band.min = float(values[best])
                band.argmin = float(index[best] / size)
                if report.min is None or band.min < report.min:
                    report.min = band.min
                    report.argmin = band.argmin
                    report.argmin_index = int(index[best])
            report.per_band.append(band)
        report.empty = report.min is None
        logger.info("Lemma scan n=%s K=%s: min %s", n, resolution, report.min)
        return report

    # tensor Dirichlet test functions

    def _check_test_resolution(self, n: int, axes: AxisSubset, resolution: Sequence[int]) -> Tuple[int, ...]:
        resolution = tuple(int(k) for k in resolution)
        if len(resolution) != axes.d:
            raise ShapeError(f"{len(resolution)} resolutions for {axes.d} axes")
        for axis, k in enumerate(resolution):
            if axes.contains_axis(axis) and 2 * n + 1 > k:
                raise ResolutionExceededError(1 << (2 * n + 1), k, axis)
        return resolution

    def tensor_dirichlet_factors(self, n: int, axes: AxisSubset, resolution: Sequence[int], halved: bool = True):
        resolution = self._check_test_resolution(n, axes, resolution)
        scale = 0.5 if halved else 1.0
        return [
            scale * dirichlet_power_samples(2 * n + 1, k) if axes.contains_axis(axis) else np.ones(1 << k)
            for axis, k in enumerate(resolution)
        ]

    def tensor_dirichlet_test(self, n: int, axes: AxisSubset, resolution: Sequence[int]) -> DyadicFunction:
        """prod_{i in B} D_{2^(2n+1)}(x_i) / 2, constant 1 along the other axes."""
        return DyadicFunction.from_factors(tuple(resolution), self.tensor_dirichlet_factors(n, axes, resolution))

    def pointwise_identity_check(self, n: int, axes: AxisSubset, resolution: Sequence[int]) -> float:
        """max |mean(test) - 2^-|B| prod_{i in B} F_{p_n}(x_i)| with every order equal to p_n."""
        p = p_seq(n)
        resolution = self._check_test_resolution(n, axes, resolution)
        for axis, k in enumerate(resolution):
            if p > (1 << k):
                raise ResolutionExceededError(p, k, axis)
        test = self.tensor_dirichlet_test(n, axes, resolution)
        mean = self.log_means.apply_mean(test, MeanSpec(axes, (p,) * axes.d))
        factors = [
            0.5 * self.log_means.kernel_f(p, k).samples if axes.contains_axis(axis) else np.ones(1 << k)
            for axis, k in enumerate(resolution)
        ]
        expected = DyadicFunction.from_factors(resolution, factors)
        return float(np.max(np.abs(mean.samples - expected.samples)))

    # growth and maximality

    def kernel_norm_growth(self, n_max: int, resolution: Optional[int] = None) -> List[GrowthRow]:
        resolution = 2 * n_max + 2 if resolution is None else resolution
        p_top = p_seq(n_max)
        if p_top > (1 << resolution):
            raise ResolutionExceededError(p_top, resolution)
        rows: List[GrowthRow] = []
        previous = None
        for n in range(1, n_max + 1):
            p = p_seq(n)
            norm = self.log_means.kernel_f(p, resolution).l1_norm
            rows.append(
                GrowthRow(n=n, p=p, l1_norm=norm, ratio=norm / n, increment=None if previous is None else norm - previous)
            )
            previous = norm
            logger.debug("||F_%s||_1 = %.17g", p, norm)
        return rows

    def _noerlund_factor(self, n: int) -> Tuple[np.ndarray, int]:
        resolution = 2 * n + 1
        test = DyadicFunction((resolution,), 0.5 * dirichlet_power_samples(resolution, resolution))
        mean = self.log_means.apply_mean(test, MeanSpec.noerlund((p_seq(n),)))
        return mean.samples, resolution

    def operator_lower_bound(self, n: int, q: YoungFunction, axes: AxisSubset) -> OperatorBoundRow:
        """||mean(test)||_1 / ||test||_Q from computed factors, beside 2^(2n|B|) n^|B| / Q(2^(2n|B|))."""
        b = axes.size
        if b < 1:
            raise DomainError("the operator bound needs at least one Noerlund axis")
        mean_factor, resolution = self._noerlund_factor(n)
        mean_l1 = float(np.abs(mean_factor).mean()) ** b
        height = 2.0 ** (2 * n)
        factor = Distribution.two_level(height, 2.0 ** (-resolution))
        test_norm = self.norms.luxemburg(distribution_product(*([factor] * b)), q)
        top = 2.0 ** (2 * n * b)
        return OperatorBoundRow(
            n=n,
            young=q.name,
            mean_l1=mean_l1,
            test_norm=test_norm,
            ratio=mean_l1 / test_norm,
            formula=top * n**b / float(q(top)),
        )

    def est1_measure(
        self,
        n: int,
        axes: AxisSubset,
        resolution: Optional[Sequence[int]] = None,
        c: Optional[float] = None,
    ) -> Est1Row:
        """mes{|mean(test)| >= c 2^(n(2|B|-1))} with every order equal to p_n."""
        b = axes.size
        if b < 1:
            raise DomainError("the measure estimate needs at least one Noerlund axis")
        c = self.est1_constant if c is None else c
        resolution = tuple(resolution) if resolution is not None else (2 * n + 1,) * axes.d
        p = p_seq(n)
        for axis, k in enumerate(resolution):
            if p > (1 << k):
                raise ResolutionExceededError(p, k, axis)
        test = self.tensor_dirichlet_test(n, axes, resolution)
        mean = self.log_means.apply_mean(test, MeanSpec(axes, (p,) * axes.d))
        threshold = c * 2.0 ** (n * (2 * b - 1))
        measure = superlevel_measure(mean, threshold, strict=False)
        if b == 1:
            logger.debug("est1 at |B| = 1 is reported without a reference bound")
        return Est1Row(
            n=n,
            c=c,
            threshold=threshold,
            measure=measure,
            ratio=measure * 2.0 ** (n * (2 * b - 1)) / n ** (b - 1),
            bound_applies=b > 1,
        )

    def cond1_profile(self, q: YoungFunction, axes: AxisSubset, orders: Sequence[int]) -> List[Cond1Row]:
        b = axes.size
        rows = []
        for n in orders:
            top = 2.0 ** (2 * n * b)
            value = float(q(top))
            scale = value / 2.0 ** (b * (2 * n + 1))
            rows.append(Cond1Row(n=n, decay=value / (top * n ** (b - 1)), scale=scale, holds=scale >= 1.0))
        return rows

    # signed translates

    def _translated_sum(self, base: DyadicFunction, config: TranslateConfig) -> np.ndarray:
        total = np.zeros(base.shape)
        for point, sign in zip(config.translations, config.signs):
            total += sign * translate(base, point).samples
        return total

    def build_xi(
        self,
        n: int,
        axes: AxisSubset,
        q: YoungFunction,
        config: TranslateConfig,
        resolution: Optional[Sequence[int]] = None,
    ) -> XiConstruction:
        """M = (1/r) sum eps_i prod_{j in B} D_{2^(2n+1)}(x_j + E_i^(j)) and xi = 2^(2|B|n-1) / Q(2^(2n|B|)) M."""
        b = axes.size
        if b < 1:
            raise DomainError("xi needs at least one Noerlund axis")
        if config.r == 0:
            raise DomainError("xi needs a non-empty translate configuration")
        resolution = tuple(resolution) if resolution is not None else config.translations[0].resolution
        if config.translations[0].resolution != tuple(resolution):
            raise ResolutionMismatchError(config.translations[0].resolution, resolution)
        factors = self.tensor_dirichlet_factors(n, axes, resolution, halved=False)
        base = DyadicFunction.from_factors(tuple(resolution), factors)
        m = DyadicFunction(base.resolution, self._translated_sum(base, config) / config.r)

        top = 2.0 ** (2 * n * b)
        q_top = float(q(top))
        xi = m * (2.0 ** (2 * b * n - 1) / q_top)
        nu = 2.0 ** (n * (4 * b - 1) - 1) / (config.r * q_top)
        sup_bound = 2.0 ** (b * (2 * n + 1))
        sup_m = float(np.abs(m.samples).max())
        l1_m = float(np.abs(m.samples).mean())
        lux = self.norms.luxemburg(xi, q)
        scale = q_top / sup_bound
        report = XiReport(
            n=n,
            B=list(axes.members),
            r=config.r,
            nu=nu,
            sup_M=sup_m,
            sup_bound=sup_bound,
            l1_M=l1_m,
            luxemburg_xi=lux,
            half_doubling=half_doubling_bound(xi, q),
            cond1_scale=scale,
            sup_ok=sup_m <= sup_bound,
            l1_ok=l1_m <= 1.0 + 1e-12,
            luxemburg_ok=lux <= 1.0 + 1e-9,
            cond1_holds=scale >= 1.0,
        )
        if not report.cond1_holds:
            logger.warning("cond1 fails at n=%s (scale %.4g); the Luxemburg bound is not promised", n, scale)
        return XiConstruction(xi=xi, m=m, nu=nu, report=report)

    def search_signed_translates(
        self,
        n: int,
        axes: AxisSubset,
        r: Optional[int] = None,
        trials: int = 16,
        seed: int = 0,
        resolution: Optional[Sequence[int]] = None,
        c: float = 1.0,
    ) -> SearchResult:
        """Random signed translates; keeps the configuration with the largest mes{|mean| > c 2^(n(2|B|-1))}."""
        b = axes.size
        if b < 1:
            raise DomainError("the search needs at least one Noerlund axis")
        r = proof_scale_r(n, axes) if r is None else r
        if r < 1:
            raise DomainError(f"r must be at least 1, got {r}")
        resolution = tuple(resolution) if resolution is not None else (2 * n + 1,) * axes.d
        p = p_seq(n)
        for axis, k in enumerate(resolution):
            if p > (1 << k):
                raise ResolutionExceededError(p, k, axis)
        threshold = c * 2.0 ** (n * (2 * b - 1))
        report = SearchReport(n=n, B=list(axes.members), r=r, trials=trials, seed=seed, threshold=threshold, measure=0.0)
        if trials == 0:
            return SearchResult(config=None, measure=0.0, report=report)

        base = DyadicFunction.from_factors(resolution, self.tensor_dirichlet_factors(n, axes, resolution, halved=False))
        # the mean commutes with translation, so it is taken once
        mean = self.log_means.apply_mean(base, MeanSpec(axes, (p,) * axes.d))
        best: Optional[TranslateConfig] = None
        best_measure = -1.0
        measures = []
        for child in np.random.SeedSequence(seed).spawn(trials):
            config = TranslateConfig.random(np.random.default_rng(child), r, resolution)
            combined = DyadicFunction(resolution, self._translated_sum(mean, config))
            measure = superlevel_measure(combined, threshold, strict=True)
            measures.append(measure)
            if measure > best_measure:
                best, best_measure = config, measure
        report.measure = best_measure
        report.translations = [list(point.coords) for point in best.translations]
        report.signs = list(best.signs)
        logger.info("Signed translate search n=%s r=%s trials=%s: best measure %.6g", n, r, trials, best_measure)
        return SearchResult(config=best, measure=best_measure, report=report, measures=measures)
