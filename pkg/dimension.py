"""
Affinity dimension
Certified intervals for s(I) = inf{s : P_I(s) <= 1} by bracketing bisection on
pressure enclosures, truncation profiles of infinite subsets and the
finiteness parameter of tail generators
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from affinity_config import get_numerics_config, get_spectrum_config
from config import settings
from errors import (
    BudgetExceeded, Inconclusive, NotPositive, ParameterOrder, TailUnavailable,
    Uncertifiable,
)
from ifs_model import IfsSystem, SubsetSpec, validate_subset
from linalg2 import certified_root
from pressure import (
    EXACT, PressureBound, exact_pressure, feasible_depth, letter_table,
    pressure_bound, truncate_with_tail,
)

logger = logging.getLogger(__name__)

PLANAR_CAP = 2.0


@dataclass
class DimensionInterval:
    """Enclosure lo <= s(subset) <= hi, capped at the planar value 2"""

    subset: SubsetSpec
    lo: float
    hi: float
    depth_used: int = 0
    words_used: int = 0
    certified: bool = True
    method: str = "bisection"
    converged: bool = True
    uncapped: Optional[Tuple[float, float]] = None

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi

    def to_dict(self) -> Dict:
        return {
            "subset": self.subset.label(),
            "lo": self.lo,
            "hi": self.hi,
            "width": self.width,
            "depth_used": self.depth_used,
            "words_used": self.words_used,
            "certified": self.certified,
            "method": self.method,
            "converged": self.converged,
        }


@dataclass
class FinitenessEstimate:
    theta_lo: float
    theta_hi: float


class _Enclosure:
    """Pressure enclosures of one subset at a chosen depth"""

    def __init__(self, system: IfsSystem, subset: SubsetSpec, budget: int,
                 threads: int, N: Optional[int]):
        self.system = system
        self.subset = subset
        self.budget = budget
        self.threads = threads
        self.certified = True
        if subset.is_finite:
            self.N = None
            self.target = subset
        else:
            margin = int(get_spectrum_config()["truncation_margin"])
            floor = max(max(subset.base, default=0), subset.tail_from, system.tail.start_index)
            self.N = N if N is not None else floor + margin
            self.target = subset.truncate(system, max(self.N, floor))
            try:
                truncate_with_tail(system, subset, 1.0, self.N, n=1, budget=budget)
            except NotPositive:
                logger.warning(f"No certified tail control for {subset.label()}; "
                               f"reporting the truncation at N={self.N}")
                self.certified = False
        self.table = letter_table(system, self.target)
        self.exact = self.certified and self.subset.is_finite and \
            exact_pressure(self.table, 0.5) is not None
        self.max_depth = feasible_depth(self.table, budget)
        self.calls = 0

    def __call__(self, s: float, depth: int) -> PressureBound:
        self.calls += 1
        if self.subset.is_finite or not self.certified:
            return pressure_bound(self.system, self.target, s, n=depth,
                                  budget=self.budget, threads=self.threads)
        return truncate_with_tail(self.system, self.subset, s, self.N, n=depth,
                                  budget=self.budget, threads=self.threads)


def _cap(interval: DimensionInterval) -> DimensionInterval:
    if interval.hi > PLANAR_CAP:
        interval.uncapped = (interval.lo, interval.hi)
        interval.lo = min(interval.lo, PLANAR_CAP)
        interval.hi = PLANAR_CAP
    return interval


def affinity_dimension(system: IfsSystem, subset: SubsetSpec,
                       tolerance: Optional[float] = None, budget: Optional[int] = None,
                       threads: Optional[int] = None, N: Optional[int] = None,
                       max_depth: Optional[int] = None,
                       strict: bool = False) -> DimensionInterval:
    """Certified interval for the affinity dimension of a finite or cofinite subset"""
    numerics = get_numerics_config()
    tolerance = settings.default_tolerance if tolerance is None else tolerance
    if tolerance <= 0:
        raise ParameterOrder("tolerance must be positive", {"tolerance": tolerance})
    budget = budget or settings.default_budget
    threads = threads or settings.threads
    validate_subset(system, subset)

    enclosure = _Enclosure(system, subset, budget, threads, N)
    table = enclosure.table
    if subset.is_finite and table.cardinality == 1:
        return DimensionInterval(subset, 0.0, 0.0, 1, 1, True, EXACT)

    top = enclosure.max_depth if max_depth is None else min(max_depth, enclosure.max_depth)
    if top < 1:
        partial = DimensionInterval(subset, 0.0, PLANAR_CAP, 0, 0, False, "none", False)
        raise BudgetExceeded(f"budget {budget} cannot afford a single level of words",
                             largest_feasible_depth=0, partial=partial,
                             context={"subset": subset.label()})
    depth = min(int(numerics["initial_depth"]), top)
    tol = min(tolerance, numerics["exact_tolerance"]) if enclosure.exact else tolerance
    max_steps = int(numerics["max_bisection_steps"])

    lo, hi = 0.0, PLANAR_CAP
    while True:
        bound = enclosure(hi, depth)
        if bound.upper < 1.0:
            break
        lo = hi
        hi *= 2.0
        if hi > 64.0:
            raise Inconclusive("pressure does not drop below 1 by s = 64",
                               {"subset": subset.label()})

    words = 0
    steps = 0
    streak = 0
    improving = True
    straddle = None
    while hi - lo > tol and steps < max_steps:
        steps += 1
        mid = 0.5 * (lo + hi)
        bound = enclosure(mid, depth)
        words = max(words, bound.words_used)
        if bound.upper < 1.0:
            hi, streak = mid, 0
            continue
        if bound.lower > 1.0:
            lo, streak = mid, 0
            continue
        straddle = mid
        streak += 1
        if streak >= 2:
            if depth < top and improving:
                deeper = min(2 * depth, top)
                retry = enclosure(mid, deeper)
                improving = retry.width < 0.9 * bound.width
                logger.debug(f"{subset.label()}: depth {depth} -> {deeper} at s={mid:.6g}")
                depth, streak = deeper, 0
                continue
            break
        # first straddle: try both quarter points before paying for depth
        quarter = 0.5 * (mid + hi)
        if enclosure(quarter, depth).upper < 1.0:
            hi = quarter
        quarter = 0.5 * (lo + mid)
        if enclosure(quarter, depth).lower > 1.0:
            lo = quarter

    if hi - lo > tol and straddle is not None:
        # split refinement at the deepest affordable depth
        a, b = min(max(straddle, lo), hi), hi
        while b - a > 0.25 * tol and steps < 2 * max_steps:
            steps += 1
            x = 0.5 * (a + b)
            if enclosure(x, depth).upper < 1.0:
                b = x
            else:
                a = x
        hi = b
        a, b = lo, max(min(straddle, hi), lo)
        while b - a > 0.25 * tol and steps < 3 * max_steps:
            steps += 1
            x = 0.5 * (a + b)
            if enclosure(x, depth).lower > 1.0:
                a = x
            else:
                b = x
        lo = a

    method = EXACT if enclosure.exact else ("truncated-with-tail" if not subset.is_finite
                                            else "bisection")
    interval = _cap(DimensionInterval(
        subset, lo, hi, depth, words, enclosure.certified, method,
        converged=hi - lo <= tolerance,
    ))
    if not interval.certified:
        if strict:
            raise Uncertifiable("no certified tail control for this subset", interval,
                                {"subset": subset.label()})
    if not interval.converged and (max_depth is None or max_depth >= enclosure.max_depth):
        # the word budget, not a caller cap, stopped the deepening
        raise BudgetExceeded(
            f"budget {budget} exhausted at depth {depth} with width {interval.width:.3g} "
            f"> {tolerance:g}",
            largest_feasible_depth=enclosure.max_depth, partial=interval,
            context={"subset": subset.label(), "best_so_far": interval.to_dict()})
    logger.debug(f"s({subset.label()}) in [{interval.lo:.12g}, {interval.hi:.12g}] "
                 f"after {enclosure.calls} enclosures")
    return interval


def similarity_dimension(ratios: Sequence[float],
                         weights: Optional[Sequence[float]] = None) -> Tuple[float, float]:
    """Certified bracket for the root of sum_i w_i r_i^s = 1"""
    weights = list(weights) if weights is not None else [1.0] * len(ratios)
    if sum(weights) <= 1.0:
        return (0.0, 0.0)

    def excess(s: float) -> float:
        return sum(w * r ** s for r, w in zip(ratios, weights)) - 1.0

    hi = 1.0
    while excess(hi) >= 0:
        hi *= 2.0
    return certified_root(excess, 0.0, hi)


def truncation_profile(system: IfsSystem, subset: SubsetSpec, N_list: Sequence[int],
                       tolerance: Optional[float] = None, budget: Optional[int] = None,
                       threads: Optional[int] = None,
                       max_depth: Optional[int] = None) -> List[DimensionInterval]:
    """Intervals for subset cut at each N, then the full subset when it is infinite"""
    N_list = list(N_list)
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ParameterOrder("truncation levels must increase", {"N_list": N_list})
    validate_subset(system, subset)
    profile = [affinity_dimension(system, subset.truncate(system, N), tolerance, budget,
                                  threads, max_depth=max_depth)
               for N in N_list]
    for prev, cur in zip(profile, profile[1:]):
        if prev.lo > cur.hi:
            raise Inconclusive("truncation dimensions decreased beyond enclosure width",
                               {"previous": prev.to_dict(), "current": cur.to_dict()})
    if not subset.is_finite:
        profile.append(affinity_dimension(system, subset, tolerance, budget, threads,
                                          N=N_list[-1], max_depth=max_depth))
    return profile


def finiteness_parameter(system: IfsSystem, subset: SubsetSpec,
                         tolerance: float = 1e-9) -> FinitenessEstimate:
    """Bracket the threshold above which the closed-form tail sum is finite"""
    validate_subset(system, subset)
    if subset.is_finite:
        return FinitenessEstimate(0.0, 0.0)
    if system.tail is None:
        raise TailUnavailable("finiteness parameter needs a tail generator",
                              {"subset": subset.label()})
    N0 = subset.tail_from - 1

    def finite(s: float) -> bool:
        return math.isfinite(system.tail.tail_sum(N0, s))

    lo, hi = 0.0, 2.0
    while not finite(hi):
        lo, hi = hi, 2.0 * hi
        if hi > 64.0:
            return FinitenessEstimate(lo, math.inf)
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if finite(mid):
            hi = mid
        else:
            lo = mid
    return FinitenessEstimate(lo, hi)
