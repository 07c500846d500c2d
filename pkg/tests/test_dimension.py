import math

import pytest

from dimension import (
    affinity_dimension, finiteness_parameter, similarity_dimension, truncation_profile,
)
from errors import BudgetExceeded, ParameterOrder, TailUnavailable
from ifs_model import HarmonicPowerTail, IfsSystem, SubsetSpec, build_selfsimilar_family
from pressure import EXACT

ORACLE_WIDTH = 1e-6
DEFAULT_WIDTH = 1e-3
S_HEAD = math.log(3.0) / math.log(5.0)


def scalar_bisection(f, lo, hi, steps=200):
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestOracles:
    def test_half_quarter_golden_root(self, half_quarter):
        expected = scalar_bisection(lambda s: 0.5 ** s + 0.25 ** s - 1.0, 0.0, 2.0)
        interval = affinity_dimension(half_quarter, SubsetSpec((1, 2)), ORACLE_WIDTH)
        assert interval.certified
        assert interval.method == EXACT
        assert interval.width <= ORACLE_WIDTH
        assert interval.contains(expected)
        assert expected == pytest.approx(math.log((1 + math.sqrt(5)) / 2) / math.log(2))

    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_equal_ratios(self, equal_quarters, k):
        interval = affinity_dimension(equal_quarters, SubsetSpec(tuple(range(1, k + 1))),
                                      ORACLE_WIDTH)
        assert interval.contains(math.log(k) / math.log(4))

    def test_singleton_has_dimension_zero(self, paper51):
        interval = affinity_dimension(paper51, SubsetSpec((7,)))
        assert (interval.lo, interval.hi) == (0.0, 0.0)
        assert interval.certified

    def test_head_copies(self, paper51):
        interval = affinity_dimension(paper51, SubsetSpec((1, 2, 3)))
        assert interval.contains(S_HEAD)
        assert interval.width <= DEFAULT_WIDTH

    def test_positive_enumerated_family(self, positive_system):
        interval = affinity_dimension(positive_system, SubsetSpec((1, 2, 3)), 0.45,
                                      budget=100_000)
        assert 0.0 < interval.lo <= interval.hi < 2.0
        assert interval.certified
        assert interval.converged


class TestSimilarityDimension:
    def test_four_quarters(self):
        lo, hi = similarity_dimension([0.25] * 4)
        assert lo <= 1.0 <= hi

    def test_weights(self):
        lo, hi = similarity_dimension([0.5], weights=[3])
        assert lo <= math.log(3) / math.log(2) <= hi

    def test_single_map(self):
        assert similarity_dimension([0.5]) == (0.0, 0.0)


class TestPolicies:
    def test_tolerance_must_be_positive(self, half_quarter):
        with pytest.raises(ParameterOrder):
            affinity_dimension(half_quarter, SubsetSpec((1, 2)), 0.0)

    def test_budget_below_one_level(self, half_quarter):
        with pytest.raises(BudgetExceeded) as info:
            affinity_dimension(half_quarter, SubsetSpec((1, 2)), budget=1)
        assert info.value.partial.hi == 2.0

    def test_exhausted_budget_carries_best_so_far(self, paper51):
        with pytest.raises(BudgetExceeded) as info:
            affinity_dimension(paper51, SubsetSpec((1, 2), 4), tolerance=1e-14, budget=2000)
        partial = info.value.partial
        assert not partial.converged
        assert 1e-14 < partial.width
        assert 0.0 < partial.lo <= partial.hi <= 2.0
        assert info.value.largest_feasible_depth >= 1
        assert info.value.context["best_so_far"]["hi"] == partial.hi

    def test_finite_subset_out_of_budget(self, positive_system):
        with pytest.raises(BudgetExceeded) as info:
            affinity_dimension(positive_system, SubsetSpec((1, 2, 3)), 1e-9, budget=1000)
        assert info.value.partial.lo <= info.value.partial.hi

    def test_depth_cap_returns_open_interval(self, positive_system):
        interval = affinity_dimension(positive_system, SubsetSpec((1, 2, 3)), 1e-9,
                                      budget=100_000, max_depth=2)
        assert not interval.converged
        assert interval.depth_used <= 2
        assert interval.lo <= interval.hi

    def test_above_planar_cap(self):
        crowded = build_selfsimilar_family([0.9] * 30)
        interval = affinity_dimension(crowded, SubsetSpec(tuple(range(1, 31))))
        assert interval.hi == 2.0
        assert interval.uncapped is not None
        assert interval.uncapped[0] > 2.0


class TestTruncation:
    @pytest.mark.slow
    def test_profile_is_a_staircase(self, paper51):
        profile = truncation_profile(paper51, SubsetSpec((1, 2), 5), [6, 8], 1e-2,
                                     budget=10_000, max_depth=4)
        assert len(profile) == 3
        assert profile[0].lo <= profile[1].hi
        assert profile[1].lo <= profile[2].hi
        assert profile[2].certified

    def test_levels_must_increase(self, paper51):
        with pytest.raises(ParameterOrder):
            truncation_profile(paper51, SubsetSpec((1, 2), 5), [8, 6])


class TestFinitenessParameter:
    def test_finite_subset(self, paper51):
        estimate = finiteness_parameter(paper51, SubsetSpec((1, 2)))
        assert (estimate.theta_lo, estimate.theta_hi) == (0.0, 0.0)

    def test_geometric_tail(self, paper51):
        estimate = finiteness_parameter(paper51, SubsetSpec((1, 2), 5))
        assert estimate.theta_hi < 1e-6

    def test_harmonic_tail(self):
        system = IfsSystem(explicit=(), tail=HarmonicPowerTail(start_index=2), name="harmonic")
        estimate = finiteness_parameter(system, SubsetSpec((), 2))
        assert estimate.theta_lo <= 0.5 <= estimate.theta_hi
        assert estimate.theta_hi - estimate.theta_lo <= 1e-8

    def test_vertical_line_tail(self, isolated52):
        estimate = finiteness_parameter(isolated52, SubsetSpec((), 3))
        assert estimate.theta_lo <= 1.0 <= estimate.theta_hi

    def test_needs_tail(self, half_quarter):
        with pytest.raises(TailUnavailable):
            finiteness_parameter(half_quarter, SubsetSpec((1,), 3))
