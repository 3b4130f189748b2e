import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from src.core.dyadic import AxisSubset, DyadicPoint
from src.errors import DomainError, ResolutionExceededError, ShapeError
from src.services.counterexample_service import (
    BandInterval,
    TranslateConfig,
    faithful_threshold,
    p_seq,
    proof_scale_r,
    tilde_m,
)
from src.services.norm_service import YoungFunction, lp_norm


def test_p_sequence():
    assert [p_seq(n) for n in range(5)] == [1, 5, 21, 85, 341]
    for n in range(1, 32):
        assert p_seq(n) == 4 * p_seq(n - 1) + 1
    with pytest.raises(DomainError):
        p_seq(32)


def test_tilde_is_hugely_negative():
    assert tilde_m(4) == -32768
    values = [tilde_m(m) for m in range(2, 40)]
    assert values == sorted(values)
    assert max(values) < 1
    with pytest.raises(DomainError):
        tilde_m(1)


def test_faithful_threshold():
    threshold = faithful_threshold()
    assert threshold["required_harmonic"] == pytest.approx(16.0 * 32770.0)
    assert threshold["m_star"] > 1000


def test_proof_scale_r():
    assert proof_scale_r(3, AxisSubset.full(1)) == 8
    assert proof_scale_r(2, AxisSubset.full(2)) == 32
    with pytest.raises(DomainError):
        proof_scale_r(2, AxisSubset.empty(2))


@pytest.mark.parametrize("n", range(1, 7))
def test_faithful_regions_are_empty(counterexamples, n):
    region = counterexamples.omega_region(n)
    assert region.mode == "faithful"
    assert region.empty
    assert not region.mask(2 * n + 2).any()
    start_m, exceptional = counterexamples.exceptional_intervals(n)
    assert start_m is None and exceptional == []


def test_override_one_gives_empty_bands(counterexamples):
    assert counterexamples.omega_region(3, 1).empty


def test_override_two_bands(counterexamples):
    n = 3
    region = counterexamples.omega_region(n, 2)
    assert [iv.m for iv in region.intervals] == list(range(n, 2 * n + 1))
    for iv in region.intervals:
        assert iv.start == Fraction(3, 1 << (iv.m + 2))
        assert iv.end == Fraction(1, 1 << iv.m)
    for a, b in itertools.combinations(region.intervals, 2):
        assert a.end <= b.start or b.end <= a.start
    start_m, exceptional = counterexamples.exceptional_intervals(n, 2)
    assert start_m == n
    for omega, hole in zip(region.intervals, exceptional):
        assert hole.start == Fraction(1, 1 << (omega.m + 1))
        assert hole.end == omega.start


def test_region_mask_and_grid_range(counterexamples):
    region = counterexamples.omega_region(2, 2)
    mask = region.mask(6)
    assert np.flatnonzero(mask).tolist() == [3, 6, 7, 12, 13, 14, 15]
    assert BandInterval(2, Fraction(3, 16), Fraction(1, 4), 2).grid_range(4) == (3, 4)
    assert BandInterval(2, Fraction(3, 16), Fraction(1, 4), 2).grid_range(2) == (1, 1)


def test_region_report(counterexamples):
    report = counterexamples.region_report(2)
    assert report.mode == "faithful"
    assert all(iv.empty for iv in report.omega)
    assert report.exceptional_start is None
    assert report.threshold["log2_p"] > 0
    override = counterexamples.region_report(2, 2)
    assert override.exceptional_start == 2
    assert override.omega[0].start == "3/16"


def test_lemma_scan_on_empty_region(counterexamples):
    report = counterexamples.lemma_gg_scan(2, 6, counterexamples.omega_region(2))
    assert report.empty and report.min is None


def test_lemma_scan_reports_per_band(counterexamples):
    report = counterexamples.lemma_gg_scan(2, 6, counterexamples.omega_region(2, 2))
    assert [band.m for band in report.per_band] == [2, 3, 4]
    assert [band.points for band in report.per_band] == [4, 2, 1]
    assert report.min == min(band.min for band in report.per_band)
    with pytest.raises(ResolutionExceededError):
        counterexamples.lemma_gg_scan(3, 6, counterexamples.omega_region(3, 2))


@pytest.mark.parametrize("n,labels,d", [(1, [1], 1), (2, [1], 2), (2, [1, 2], 2), (3, [2], 3)])
def test_tensor_dirichlet_test_function(counterexamples, n, labels, d):
    axes = AxisSubset.from_labels(d, labels)
    resolution = tuple(2 * n + 1 if axes.contains_axis(i) else 2 for i in range(d))
    test = counterexamples.tensor_dirichlet_test(n, axes, resolution)
    b = axes.size
    assert test.samples.max() == 2.0 ** (2 * n * b)
    assert test.support_measure() == pytest.approx(2.0 ** (-(2 * n + 1) * b))
    assert lp_norm(test, 1) == pytest.approx(2.0 ** -b)


def test_test_function_needs_resolution(counterexamples):
    with pytest.raises(ResolutionExceededError):
        counterexamples.tensor_dirichlet_test(2, AxisSubset.full(1), (4,))


def _nonempty_subsets(d):
    for size in range(1, d + 1):
        for labels in itertools.combinations(range(1, d + 1), size):
            yield labels


POINTWISE_CASES = [(n, d, labels) for n, d in [(1, 1), (2, 1), (3, 1), (1, 2), (2, 2), (3, 2), (1, 3), (2, 3)]
                   for labels in _nonempty_subsets(d)]


@pytest.mark.parametrize("n,d,labels", POINTWISE_CASES)
def test_pointwise_identity(counterexamples, n, d, labels):
    axes = AxisSubset.from_labels(d, labels)
    deviation = counterexamples.pointwise_identity_check(n, axes, (2 * n + 1,) * d)
    assert deviation < 1e-9


def test_operator_bound_matches_kernel_norm(counterexamples, log_means):
    for n in (2, 3):
        row = counterexamples.operator_lower_bound(n, YoungFunction.log_power(0.0), AxisSubset.full(1))
        kernel_l1 = log_means.kernel_f(p_seq(n), 2 * n + 1).l1_norm
        assert row.mean_l1 == pytest.approx(0.5 * kernel_l1, rel=1e-12)
        assert row.test_norm == pytest.approx(0.5, rel=1e-9)
        assert row.ratio == pytest.approx(kernel_l1, rel=1e-9)
        assert row.formula == pytest.approx(n)


def test_est1_decreases_with_threshold(counterexamples):
    axes = AxisSubset.full(2)
    measures = [counterexamples.est1_measure(2, axes, c=c).measure for c in (0.05, 0.1, 0.25, 0.5, 1.0, 2.0)]
    assert all(a >= b for a, b in zip(measures, measures[1:]))
    single = counterexamples.est1_measure(2, AxisSubset.full(1))
    assert not single.bound_applies


def test_cond1_profile(counterexamples):
    axes = AxisSubset.full(2)
    rows = counterexamples.cond1_profile(YoungFunction.log_power(1.0), axes, range(1, 6))
    for row in rows:
        top = 2.0 ** (4 * row.n)
        assert row.scale == pytest.approx(math.log1p(top) / 4.0)
        assert row.decay == pytest.approx(math.log1p(top) / row.n)
    assert [row.holds for row in rows] == [False, True, True, True, True]


@pytest.mark.parametrize("beta", [0.0, 0.5])
def test_cond1_decay_falls_below_the_inclusion_power(counterexamples, beta):
    rows = counterexamples.cond1_profile(YoungFunction.log_power(beta), AxisSubset.full(2), range(2, 7))
    decay = [row.decay for row in rows]
    assert all(a > b for a, b in zip(decay, decay[1:]))
    expected = [math.log1p(2.0 ** (4 * n)) ** beta / n for n in range(2, 7)]
    np.testing.assert_allclose(decay, expected, rtol=1e-12)


def test_xi_single_translate(counterexamples):
    n, axes = 2, AxisSubset.full(2)
    q = YoungFunction.log_power(2.0)
    built = counterexamples.build_xi(n, axes, q, TranslateConfig.single((5, 5)))
    report = built.report
    top = 2.0**8
    assert report.r == 1
    assert report.sup_M == report.sup_bound == 2.0**10
    assert report.l1_M == pytest.approx(1.0)
    assert report.nu == pytest.approx(2.0**13 / q(top))
    assert report.sup_ok and report.l1_ok and report.luxemburg_ok and report.cond1_holds
    assert report.luxemburg_xi <= report.half_doubling + 1e-9


def test_xi_random_translates(counterexamples):
    axes = AxisSubset.full(2)
    q = YoungFunction.log_power(2.0)
    for seed in range(20):
        rng = np.random.default_rng(seed)
        config = TranslateConfig.random(rng, int(rng.integers(1, 9)), (5, 5))
        report = counterexamples.build_xi(2, axes, q, config).report
        assert report.sup_ok and report.l1_ok and report.luxemburg_ok


def test_translate_config_validation():
    origin = DyadicPoint.origin((3,))
    with pytest.raises(ShapeError):
        TranslateConfig((origin,), (1, -1))
    with pytest.raises(DomainError):
        TranslateConfig((origin,), (0,))


def test_search_without_trials(counterexamples):
    result = counterexamples.search_signed_translates(2, AxisSubset.full(2), r=4, trials=0)
    assert result.config is None and result.measure == 0.0


def test_search_single_translate_is_translation_invariant(counterexamples, baselines):
    expected = {row["n"]: row["measure"] for row in baselines["search"]["rows"]}
    for n in (2, 3):
        result = counterexamples.search_signed_translates(n, AxisSubset.full(2), r=1, trials=3, seed=7)
        assert result.measure == pytest.approx(expected[n], rel=1e-12)
        assert result.measures == pytest.approx([expected[n]] * 3, rel=1e-12)


def test_search_is_deterministic(counterexamples):
    axes = AxisSubset.full(2)
    first = counterexamples.search_signed_translates(2, axes, r=3, trials=4, seed=11)
    second = counterexamples.search_signed_translates(2, axes, r=3, trials=4, seed=11)
    assert first.report.model_dump() == second.report.model_dump()
    assert first.measure == max(first.measures)
