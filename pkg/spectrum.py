"""
Dimension spectra
Spectrum clouds over enumerated subsets, certified gap and isolated-point
detection, the hole certificate of the conjugated-diagonal gallery and the
checks and demos built on it
"""

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from affinity_config import get_numerics_config, get_output_config, get_spectrum_config
from config import settings
from dimension import DimensionInterval, affinity_dimension, similarity_dimension
from errors import (
    AssumptionViolated, BudgetExceeded, FileIO, Inconclusive, ParameterOrder,
)
from ifs_model import (
    GeometricSelfSimilarTail, IfsSystem, PaperFamily51Tail, SubsetSpec,
    build_isolated_point_family, build_paper_family_51, paper51_conditions,
    paper51_crucial_bound, validate_subset,
)
from linalg2 import SLACK, certified_root
from pressure import feasible_depth, letter_table, pressure_bound, truncate_with_tail
from word_tree import build_letter_table, release_word_tree, word_tree

logger = logging.getLogger(__name__)

AFFINITY = "affinity"
CLOSED_FORM = "closed-form"
PROJECTION = "projection-bound"

UNIVERSE_NOTE = "relative to the enumerated universe plus the case analysis"

ISOLATED_HEAD_VALUE = 0.5
# Hausdorff dimension of the middle-third Cantor set
PROJECTION_BOUND = math.log(2.0) / math.log(3.0)


@dataclass
class SpectrumPoint:
    """One subset with its spectrum value and, where computed, its affinity interval"""

    subset: SubsetSpec
    interval: DimensionInterval
    source: str = AFFINITY
    affinity: Optional[DimensionInterval] = None
    note: str = ""

    def to_dict(self) -> Dict[str, Any]:
        data = self.interval.to_dict()
        data["source"] = self.source
        if self.affinity is not None and self.affinity is not self.interval:
            data["affinity"] = [self.affinity.lo, self.affinity.hi]
        if self.note:
            data["note"] = self.note
        return data


@dataclass
class SpectrumCloud:
    ground_set: SubsetSpec
    n_max: int
    mode: str
    points: List[SpectrumPoint] = field(default_factory=list)
    gaps: List[Tuple[float, float]] = field(default_factory=list)
    isolated_candidates: List[Dict[str, Any]] = field(default_factory=list)
    min_gap: float = 0.0
    partial: bool = False
    failures: List[Dict[str, Any]] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)

    def point(self, subset: SubsetSpec) -> Optional[SpectrumPoint]:
        for p in self.points:
            if p.subset == subset:
                return p
        return None

    def significant_gaps(self) -> List[Tuple[float, float]]:
        return [g for g in self.gaps if g[1] - g[0] >= self.min_gap]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ground_set": self.ground_set.label(),
            "n_max": self.n_max,
            "mode": self.mode,
            "scope": UNIVERSE_NOTE,
            "points": [p.to_dict() for p in self.points],
            "gaps": [list(g) for g in self.gaps],
            "min_gap": self.min_gap,
            "isolated_candidates": self.isolated_candidates,
            "partial": self.partial,
            "failures": self.failures,
            "details": self.details,
        }

    def to_csv_rows(self) -> List[List[str]]:
        digits = int(get_output_config()["significant_digits"])
        rows = [["subset", "lo", "hi", "certified", "method"]]
        for p in self.points:
            rows.append([p.subset.label(), f"{p.interval.lo:.{digits}g}",
                         f"{p.interval.hi:.{digits}g}", str(p.interval.certified).lower(),
                         p.interval.method])
        return rows


@dataclass
class HoleCertificate:
    interval: Tuple[float, float]
    case_table: List[Dict[str, Any]]
    parameters: Dict[str, Any]
    reference: DimensionInterval
    enumerated: int = 0
    violations: List[str] = field(default_factory=list)
    certified: bool = True

    @property
    def width(self) -> float:
        return self.interval[1] - self.interval[0]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "interval": list(self.interval),
            "width": self.width,
            "case_table": self.case_table,
            "parameters": self.parameters,
            "reference": self.reference.to_dict(),
            "enumerated": self.enumerated,
            "violations": self.violations,
            "certified": self.certified,
            "scope": UNIVERSE_NOTE,
        }


@dataclass
class CheckResult:
    """Outcome of one executable check, with its margin where one exists"""

    name: str
    passed: bool
    margin: Optional[float] = None
    details: Dict[str, Any] = field(default_factory=dict)
    certified: bool = True
    advisory: bool = False

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "margin": self.margin,
            "certified": self.certified,
            "advisory": self.advisory,
            "details": self.details,
        }


@dataclass
class NonCompactReport:
    target: float
    hausdorff_head: float
    sequence: List[DimensionInterval]
    strictly_above: bool
    decreasing: bool
    shrink_factor: float
    hole: Optional[HoleCertificate] = None

    @property
    def passed(self) -> bool:
        hole_ok = self.hole is None or self.hole.certified
        return self.strictly_above and self.decreasing and self.shrink_factor >= 10.0 and hole_ok

    def to_dict(self) -> Dict[str, Any]:
        return {
            "target": self.target,
            "hausdorff_head": self.hausdorff_head,
            "sequence": [iv.to_dict() for iv in self.sequence],
            "strictly_above": self.strictly_above,
            "decreasing": self.decreasing,
            "shrink_factor": self.shrink_factor,
            "hole": self.hole.to_dict() if self.hole else None,
            "passed": self.passed,
        }


# ---------------------------------------------------------------------------
# Gallery routing
# ---------------------------------------------------------------------------

def _is_paper51(system: IfsSystem) -> bool:
    return isinstance(system.tail, PaperFamily51Tail) and system.name == "paper51"


def _is_isolated52(system: IfsSystem) -> bool:
    return isinstance(system.tail, GeometricSelfSimilarTail) and system.name == "isolated52"


def _paper51_params(system: IfsSystem) -> Dict[str, float]:
    params = system.parameters
    return {k: float(params[k]) for k in ("beta", "gamma", "b", "d", "c", "eta")}


def _target_gap(system: IfsSystem) -> Optional[float]:
    """Closed-form estimate of the gallery's headline gap"""
    if _is_paper51(system):
        return math.log(1.5) / math.log(system.tail.beta)
    if _is_isolated52(system):
        s0_hi = system.parameters["s0"][1]
        return min(ISOLATED_HEAD_VALUE - s0_hi, PROJECTION_BOUND - ISOLATED_HEAD_VALUE)
    return None


def _exact(subset: SubsetSpec, value: float, lo: Optional[float] = None) -> DimensionInterval:
    return DimensionInterval(subset, value if lo is None else lo, value, 0, 0, True, CLOSED_FORM)


def _tail_only_similarity(system: IfsSystem, subset: SubsetSpec) -> Tuple[float, float]:
    """Similarity dimension of vertical-line subsets of the isolated-point gallery"""
    tail = system.tail
    if subset.is_finite:
        if len(subset.base) == 1:
            return (0.0, 0.0)
        return similarity_dimension([tail.ratio(i) for i in subset.base])
    ratios = [tail.ratio(i) for i in subset.base if i < subset.tail_from]
    if not ratios and subset.tail_from <= tail.start_index:
        return tail.root()
    first = subset.tail_from - tail.offset

    def excess(s: float) -> float:
        q = tail.base ** (-s)
        return sum(r ** s for r in ratios) + q ** first / (1.0 - q) - 1.0

    hi = 1.0
    while excess(hi) >= 0:
        hi *= 2.0
    return certified_root(excess, 1e-9, hi)


def _route(system: IfsSystem, subset: SubsetSpec) -> Tuple[str, Optional[DimensionInterval]]:
    """Closed-form spectrum value for subsets a gallery declares exceptional"""
    if _is_paper51(system) and subset.is_finite and set(subset.base) <= {1, 2, 3}:
        k = len(subset.base)
        # copies stacked on a line: self-similar with ratio 1/gamma
        return CLOSED_FORM, _exact(subset, math.log(k) / math.log(system.tail.gamma))
    if _is_isolated52(system):
        heads = [i for i in subset.base if i < system.tail.start_index]
        has_tail = not subset.is_finite or len(heads) < len(subset.base)
        if not has_tail:
            value = 0.0 if len(heads) == 1 else \
                math.log(len(heads)) / math.log(1.0 / system.matrix(heads[0]).d)
            return CLOSED_FORM, _exact(subset, value)
        if not heads:
            lo, hi = _tail_only_similarity(system, subset)
            return CLOSED_FORM, _exact(subset, hi, lo)
        return PROJECTION, None
    return AFFINITY, None


def _needs_affinity(system: IfsSystem, subset: SubsetSpec, source: str) -> bool:
    if source == PROJECTION or source == AFFINITY:
        return True
    return _is_paper51(system)


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------

def distinguished_subsets(system: IfsSystem) -> List[SubsetSpec]:
    """Cofinite subsets the gallery arguments single out"""
    if system.tail is None:
        return []
    t = system.tail.start_index
    if _is_paper51(system):
        bases = [(1, 2), (3,), (1, 3), (2, 3), (1, 2, 3), ()]
    elif _is_isolated52(system):
        bases = [(), (1,), (1, 2)]
    else:
        bases = [(), tuple(system.explicit_indices)]
    return [SubsetSpec(b, t) for b in dict.fromkeys(bases)]


def _finite_subsets(ground: Sequence[int], mode: str, samples: int,
                    seed: int) -> List[SubsetSpec]:
    k = len(ground)
    if mode == "exhaustive":
        limit = int(get_spectrum_config()["exhaustive_limit"])
        if k > limit:
            raise ParameterOrder(f"exhaustive enumeration is limited to {limit} indices",
                                 {"ground_size": k})
        masks: Iterable[int] = range(1, 1 << k)
        return [SubsetSpec(tuple(g for j, g in enumerate(ground) if mask >> j & 1))
                for mask in masks]
    if mode != "sampled":
        raise ParameterOrder(f"unknown enumeration mode: {mode}", {"mode": mode})
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, 2, size=(samples, k)).astype(bool)
    found = {tuple(g for g, keep in zip(ground, row) if keep) for row in rows}
    found.update((g,) for g in ground)
    found.discard(())
    return [SubsetSpec(b) for b in sorted(found)]


def _monotone_closure(items: List[Tuple[SubsetSpec, DimensionInterval]]) -> None:
    """Tighten intervals with their sub- and supersets' certified ends"""
    for sub, small in items:
        for sup, big in items:
            if sub is sup or not sub.issubset(sup):
                continue
            if small.certified and big.certified:
                big.lo = max(big.lo, small.lo)
                small.hi = min(small.hi, big.hi)


def _gaps(intervals: List[Tuple[float, float]]) -> Tuple[List[Tuple[float, float]],
                                                         List[Tuple[float, float, List[int]]]]:
    """Open gaps between merged point clusters, and the clusters themselves"""
    order = sorted(range(len(intervals)), key=lambda i: intervals[i])
    clusters: List[Tuple[float, float, List[int]]] = []
    for i in order:
        lo, hi = intervals[i]
        if clusters and lo <= clusters[-1][1]:
            c_lo, c_hi, members = clusters[-1]
            members.append(i)
            clusters[-1] = (c_lo, max(c_hi, hi), members)
        else:
            clusters.append((lo, hi, [i]))
    gaps = [(a[1], b[0]) for a, b in zip(clusters, clusters[1:])]
    return gaps, clusters


def enumerate_spectrum(system: IfsSystem, n_max: Optional[int] = None,
                       tolerance: Optional[float] = None, budget: Optional[int] = None,
                       mode: str = "exhaustive", samples: Optional[int] = None,
                       seed: Optional[int] = None, threads: Optional[int] = None,
                       include_cofinite: bool = True,
                       max_depth: Optional[int] = None) -> SpectrumCloud:
    """Spectrum values of every enumerated subset with certified gaps between them"""
    spectrum_cfg = get_spectrum_config()
    n_max = int(spectrum_cfg["n_max"] if n_max is None else n_max)
    samples = int(spectrum_cfg["samples"] if samples is None else samples)
    seed = int(spectrum_cfg["seed"] if seed is None else seed)
    threads = threads or settings.threads
    max_depth = max_depth or int(get_numerics_config()["spectrum_max_depth"])
    target = _target_gap(system)
    tolerance = tolerance or settings.default_tolerance
    if target is not None:
        tolerance = min(tolerance, 0.1 * target)
    min_gap = 0.1 * target if target is not None else 10.0 * tolerance

    ground = system.indices_up_to(n_max)
    subsets = _finite_subsets(ground, mode, samples, seed)
    if include_cofinite:
        subsets += distinguished_subsets(system)
    subsets.sort(key=lambda s: s.sort_key())
    logger.info(f"Enumerating {len(subsets)} subsets of {system.name} up to index {n_max}")

    routed = {s: _route(system, s) for s in subsets}
    wanted = [s for s in subsets if _needs_affinity(system, s, routed[s][0])]

    def solve(subset: SubsetSpec) -> Tuple[SubsetSpec, Any]:
        try:
            interval = affinity_dimension(system, subset, tolerance, budget, threads=1,
                                          max_depth=max_depth)
        except BudgetExceeded as e:
            return subset, e
        finally:
            if subset.is_finite:
                release_word_tree(letter_table(system, subset))
        return subset, interval

    if threads > 1 and len(wanted) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            solved = dict(pool.map(solve, wanted))
    else:
        solved = dict(solve(s) for s in wanted)

    cloud = SpectrumCloud(ground_set=SubsetSpec(tuple(ground)), n_max=n_max, mode=mode,
                          min_gap=min_gap)
    affinity: Dict[SubsetSpec, DimensionInterval] = {}
    for subset, result in solved.items():
        if isinstance(result, BudgetExceeded):
            cloud.partial = True
            cloud.failures.append(dict(result.to_dict(), subset=subset.label()))
        else:
            affinity[subset] = result
    _monotone_closure(sorted(affinity.items(), key=lambda kv: kv[0].sort_key()))

    for subset in subsets:
        source, interval = routed[subset]
        aff = affinity.get(subset)
        if source == AFFINITY:
            if aff is None:
                continue
            interval = aff
        elif source == PROJECTION:
            # x-projection is the middle-third Cantor set; affinity bounds Hausdorff above
            lo = PROJECTION_BOUND
            hi = max(lo, aff.hi) if aff is not None else 2.0
            interval = DimensionInterval(subset, lo, hi, aff.depth_used if aff else 0,
                                         aff.words_used if aff else 0,
                                         aff.certified if aff else True, PROJECTION)
        cloud.points.append(SpectrumPoint(subset, interval, source, aff))

    gaps, clusters = _gaps([(p.interval.lo, p.interval.hi) for p in cloud.points])
    cloud.gaps = [g for g in gaps if g[1] > g[0]]
    for k, (lo, hi, members) in enumerate(clusters):
        if k == 0 or k == len(clusters) - 1:
            continue
        below, above = gaps[k - 1], gaps[k]
        if below[1] - below[0] >= min_gap and above[1] - above[0] >= min_gap:
            cloud.isolated_candidates.append({
                "interval": [lo, hi],
                "subsets": [cloud.points[i].subset.label() for i in members],
                "gap_below": list(below),
                "gap_above": list(above),
            })
    cloud.details = {"system": system.name, "tolerance": tolerance,
                     "subsets": len(subsets), "max_depth": max_depth}
    logger.info(f"Spectrum of {system.name}: {len(cloud.points)} points, "
                f"{len(cloud.significant_gaps())} gaps wider than {min_gap:.3g}")
    return cloud


def write_cloud(cloud: SpectrumCloud, path: str, fmt: str = "json") -> None:
    """Emit a cloud as JSON, or as flat CSV rows for plotting"""
    if fmt not in get_output_config()["formats"]:
        raise ParameterOrder(f"unknown output format: {fmt}", {"format": fmt})
    try:
        with open(path, "w", newline="") as f:
            if fmt == "json":
                json.dump(cloud.to_dict(), f, indent=2)
            else:
                writer = csv.writer(f, delimiter=get_output_config()["csv_delimiter"])
                writer.writerows(cloud.to_csv_rows())
    except OSError as e:
        raise FileIO(f"cannot write spectrum: {e}", {"path": path})


# ---------------------------------------------------------------------------
# Executable checks
# ---------------------------------------------------------------------------

def verify_lemma_sI(beta: float, c: float, eta: float) -> CheckResult:
    """beta^{2s} - beta^s > K^s at s = log 3 / log beta with K = 8 / (c eta)"""
    if not beta > 3.0 or not 0.0 < c < 1.0 or not 0.0 < eta < 1.0:
        raise ParameterOrder("need beta > 3 and c, eta in (0, 1)",
                             {"beta": beta, "c": c, "eta": eta})
    s = math.log(3.0) / math.log(beta)
    left = beta ** (2.0 * s) - beta ** s
    K = 8.0 / (c * eta)
    right = K ** s
    return CheckResult("head-growth", left > right, left - right,
                       {"s": s, "left": left, "right": right, "K": K})


def verify_lemma_crucial(beta: float, gamma: float, b: float, d: float, c: float,
                         eta: float, system: Optional[IfsSystem] = None,
                         budget: Optional[int] = None, N: int = 12,
                         depth: Optional[int] = None) -> CheckResult:
    """Closed-form bound P_{I'}(s) < 1 at s = log 3 / log beta, cross-checked by enumeration"""
    conditions = paper51_conditions(beta, gamma, b, d, c, eta)
    standing = {k: v for k, v in conditions.items() if k != "crucial_bound"}
    failing = [k for k, v in standing.items() if not v]
    if failing:
        raise AssumptionViolated("standing assumptions fail", tuple(failing),
                                 {"beta": beta, "gamma": gamma, "b": b, "d": d, "c": c})
    bound = paper51_crucial_bound(beta, gamma, b, d, c, eta)
    details: Dict[str, Any] = dict(bound)

    if system is None:
        system = build_paper_family_51(beta, gamma, b, d, c, eta)
    budget = budget or settings.default_budget
    prime = SubsetSpec((1, 2), system.tail.start_index)
    table = letter_table(system, prime.truncate(system, N))
    depth = min(depth or int(get_numerics_config()["spectrum_max_depth"]),
                feasible_depth(table, budget))
    enclosure = truncate_with_tail(system, prime, bound["s"], N, n=depth, budget=budget)
    details["enumerated_upper"] = enclosure.upper
    details["enumerated_lower"] = enclosure.lower
    details["truncation"] = N
    passed = bound["direct"] < 1.0 and enclosure.upper < 1.0
    return CheckResult("prime-pressure-bound", passed, 1.0 - max(bound["direct"], enclosure.upper),
                       details)


def verify_digit_monotonicity(system: IfsSystem, I: SubsetSpec, m: int, n: int,
                              depths: Sequence[int] = (1, 2, 3, 4),
                              s: Optional[float] = None, tolerance: Optional[float] = None,
                              with_dimensions: bool = True) -> CheckResult:
    """Replacing tail digit m by a later digit n never increases a word's norm"""
    if not _is_paper51(system):
        raise ParameterOrder("digit replacement needs the conjugated-diagonal gallery",
                             {"system": system.name})
    start = system.tail.start_index
    if not n >= m >= start or not I.is_finite or I.contains(m) or I.contains(n):
        raise ParameterOrder("need n >= m >= tail start, both outside a finite I",
                             {"I": I.label(), "m": m, "n": n})
    validate_subset(system, I)
    s = math.log(3.0) / math.log(system.tail.beta) if s is None else s

    a_m, a_n = system.matrix(m), system.matrix(n)
    dominated = a_m.dominates(a_n)
    order_m = list(I.base) + [m]
    order_n = list(I.base) + [n]
    tree_m = word_tree(build_letter_table(system.matrices(order_m), order_m, merge=False))
    tree_n = word_tree(build_letter_table(system.matrices(order_n), order_n, merge=False))

    per_depth = []
    ordered = dominated
    for depth in depths:
        spec_m, spec_n = tree_m.spectrum(depth), tree_n.spectrum(depth)
        allowance = math.log1p((depth + 8) * SLACK)
        termwise = bool(np.all(spec_n.log_alpha1 <= spec_m.log_alpha1 + allowance))
        if spec_m.log_entry is not None and spec_n.log_entry is not None:
            termwise = termwise and bool(np.all(spec_n.log_entry <= spec_m.log_entry + allowance))
        sum_m, sum_n = spec_m.log_sum(s), spec_n.log_sum(s)
        per_depth.append({"depth": depth, "termwise": termwise,
                          "log_sum_m": sum_m, "log_sum_n": sum_n})
        ordered = ordered and termwise and sum_n <= sum_m + allowance

    details: Dict[str, Any] = {"entry_domination": dominated, "depths": per_depth, "s": s}
    margin = None
    if with_dimensions:
        with_n = affinity_dimension(system, I.union(SubsetSpec((n,))), tolerance,
                                    max_depth=int(get_numerics_config()["spectrum_max_depth"]))
        with_m = affinity_dimension(system, I.union(SubsetSpec((m,))), tolerance,
                                    max_depth=int(get_numerics_config()["spectrum_max_depth"]))
        details["dimension_n"] = [with_n.lo, with_n.hi]
        details["dimension_m"] = [with_m.lo, with_m.hi]
        margin = with_m.hi - with_n.lo
        ordered = ordered and margin >= 0
    return CheckResult("digit-monotonicity", ordered, margin, details)


# ---------------------------------------------------------------------------
# Hole certificate
# ---------------------------------------------------------------------------

def _case_of(subset: SubsetSpec) -> int:
    has = {i for i in (1, 2, 3) if subset.contains(i)}
    if {1, 2} <= has:
        return 4 if 3 in has else 1
    if not has & {1, 2}:
        return 2
    return 3


def certify_hole(system: IfsSystem, n_max: Optional[int] = None,
                 tolerance: Optional[float] = None, budget: Optional[int] = None,
                 threads: Optional[int] = None) -> HoleCertificate:
    """No enumerated subset has dimension strictly between s(I') and s({1,2,3})"""
    if not _is_paper51(system):
        raise ParameterOrder("the hole certificate needs the conjugated-diagonal gallery",
                             {"system": system.name})
    params = _paper51_params(system)
    crucial = verify_lemma_crucial(system=system, budget=budget, **params)
    if not crucial.passed:
        raise Inconclusive("the prime subset pressure is not certified below 1",
                           {"margin": crucial.margin})
    n_max = int(get_spectrum_config()["n_max"] if n_max is None else n_max)
    depth_cap = int(get_numerics_config()["spectrum_max_depth"])
    tolerance = min(tolerance or settings.default_tolerance, 0.1 * _target_gap(system))
    t = system.tail.start_index

    head = SubsetSpec((1, 2, 3))
    reference = affinity_dimension(system, head, tolerance, budget, threads)
    dominators = {
        1: SubsetSpec((1, 2), t),
        2: SubsetSpec((3,), t),
        3: SubsetSpec((1, 3), t),
    }
    third_alt = SubsetSpec((2, 3), t)
    bounds = {key: affinity_dimension(system, sub, tolerance, budget, threads,
                                      max_depth=depth_cap)
              for key, sub in dominators.items()}
    alt = affinity_dimension(system, third_alt, tolerance, budget, threads, max_depth=depth_cap)
    upper = max([b.hi for b in bounds.values()] + [alt.hi])
    if not upper < reference.lo:
        raise Inconclusive("dominating intervals reach the reference interval",
                           {"dominator_hi": upper, "reference_lo": reference.lo,
                            "hint": "raise the budget or lower the tolerance"})
    gap = (upper, reference.lo)

    ground = system.indices_up_to(n_max)
    counts = {1: 0, 2: 0, 3: 0, 4: 0}
    violations: List[str] = []
    uniqueness_checked = 0
    for subset in _finite_subsets(ground, "exhaustive", 0, 0) + distinguished_subsets(system):
        case = _case_of(subset)
        counts[case] += 1
        if case == 1 and not subset.issubset(dominators[1]):
            violations.append(subset.label())
        elif case == 2 and not subset.issubset(dominators[2]):
            violations.append(subset.label())
        elif case == 3 and not (subset.issubset(dominators[3]) or subset.issubset(third_alt)):
            violations.append(subset.label())
        elif case == 4 and subset != head:
            target = subset if subset.is_finite else subset.truncate(system, t)
            table = letter_table(system, target)
            n = min(feasible_depth(table, budget or settings.default_budget), depth_cap)
            uniqueness_checked += 1
            if not pressure_bound(system, target, reference.hi, n=n, budget=budget).lower > 1.0:
                violations.append(subset.label())

    case_table = [
        {"case": 1, "condition": "1,2 in I and 3 not in I", "dominator": dominators[1].label(),
         "interval": [bounds[1].lo, bounds[1].hi], "enumerated": counts[1]},
        {"case": 2, "condition": "1,2 not in I", "dominator": dominators[2].label(),
         "interval": [bounds[2].lo, bounds[2].hi], "enumerated": counts[2],
         "below_prime": bounds[2].hi < bounds[1].lo},
        {"case": 3, "condition": "exactly one of 1,2 in I",
         "dominator": f"{dominators[3].label()} | {third_alt.label()}",
         "interval": [min(bounds[3].lo, alt.lo), max(bounds[3].hi, alt.hi)],
         "enumerated": counts[3]},
        {"case": 4, "condition": "1,2,3 in I", "dominator": head.label(),
         "interval": [reference.lo, reference.hi], "enumerated": counts[4],
         "strictly_above_checked": uniqueness_checked},
    ]
    if violations:
        logger.warning(f"Hole certificate could not place {len(violations)} subsets: "
                       f"{violations[:5]}")
    return HoleCertificate(
        interval=gap,
        case_table=case_table,
        parameters=dict(params, n_max=n_max, tolerance=tolerance),
        reference=reference,
        enumerated=sum(counts.values()),
        violations=violations,
        certified=not violations,
    )


# ---------------------------------------------------------------------------
# Demos
# ---------------------------------------------------------------------------

def _band_of(point: SpectrumPoint, start: int, s0_hi: float) -> Tuple[str, bool]:
    """Band of an isolated-gallery point and whether its intervals respect it"""
    heads = [i for i in point.subset.base if i < start]
    mixed = bool(heads) and (not point.subset.is_finite or len(heads) < len(point.subset.base))
    if mixed:
        # enumerated affinity enclosure must clear the isolated value on its own
        aff = point.affinity
        ok = aff is not None and aff.lo > ISOLATED_HEAD_VALUE and aff.hi >= PROJECTION_BOUND
        return "high", ok
    if len(heads) == 2 and point.subset.is_finite:
        return "isolated", point.interval.lo == point.interval.hi == ISOLATED_HEAD_VALUE
    return "low", point.interval.hi <= s0_hi < ISOLATED_HEAD_VALUE


def isolated_point_demo(tolerance: Optional[float] = None, budget: Optional[int] = None,
                        n_max: Optional[int] = None, threads: Optional[int] = None,
                        system: Optional[IfsSystem] = None) -> SpectrumCloud:
    """Spectrum of the isolated-point gallery with its three-band check"""
    system = system or build_isolated_point_family()
    cloud = enumerate_spectrum(system, n_max, tolerance, budget, threads=threads)
    s0_lo, s0_hi = system.parameters["s0"]
    start = system.tail.start_index

    bands = {"low": 0, "isolated": 0, "high": 0}
    broken = []
    for p in cloud.points:
        band, ok = _band_of(p, start, s0_hi)
        bands[band] += 1
        if not ok:
            broken.append(p.subset.label())
    cloud.details.update({
        "s0": [s0_lo, s0_hi],
        "head_value": ISOLATED_HEAD_VALUE,
        "projection_bound": PROJECTION_BOUND,
        "bands": bands,
        "bands_hold": not broken,
        "band_violations": broken,
    })
    return cloud


def non_compact_demo(tolerance: Optional[float] = None, budget: Optional[int] = None,
                     system: Optional[IfsSystem] = None, tail: Optional[Sequence[int]] = None,
                     with_hole: bool = True, n_max: Optional[int] = None) -> NonCompactReport:
    """Dimensions of {1,2,3,n} fall toward log 3 / log beta from above while never reaching it"""
    system = system or build_paper_family_51()
    if not _is_paper51(system):
        raise ParameterOrder("the non-compact demo needs the conjugated-diagonal gallery",
                             {"system": system.name})
    spectrum_cfg = get_spectrum_config()
    first, last = tail or spectrum_cfg["non_compact_tail"]
    tolerance = tolerance or float(spectrum_cfg["non_compact_tolerance"])
    beta, gamma = system.tail.beta, system.tail.gamma
    target = math.log(3.0) / math.log(beta)

    sequence = []
    for n in range(first, last + 1):
        try:
            interval = affinity_dimension(system, SubsetSpec((1, 2, 3, n)), tolerance, budget)
        except BudgetExceeded as e:
            logger.warning(f"{{1,2,3,{n}}}: {e}; keeping the best enclosure so far")
            interval = e.partial
        logger.info(f"s({{1,2,3,{n}}}) - target in [{interval.lo - target:.3e}, "
                    f"{interval.hi - target:.3e}]")
        sequence.append(interval)
    above = all(iv.lo > target and iv.certified for iv in sequence)
    decreasing = all(b.hi < a.hi for a, b in zip(sequence, sequence[1:]))
    excess = [iv.hi - target for iv in sequence]
    factor = excess[0] / excess[-1] if excess[-1] > 0 else math.inf

    hole = None
    if with_hole:
        try:
            hole = certify_hole(system, n_max, budget=budget)
        except (Inconclusive, AssumptionViolated) as e:
            logger.error(f"Hole certificate failed: {e}")
            raise
    return NonCompactReport(
        target=target,
        hausdorff_head=math.log(3.0) / math.log(gamma),
        sequence=sequence,
        strictly_above=above,
        decreasing=decreasing,
        shrink_factor=factor,
        hole=hole,
    )
