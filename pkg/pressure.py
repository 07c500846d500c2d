"""
Pressure enclosures
Partition sums over words, certified two-sided bounds on P_I(s), exact
multiplicative paths, additive delta bounds and tail truncation
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from affinity_config import get_numerics_config
from config import settings
from errors import (
    BudgetExceeded, ConstantsUnavailable, EmptySubset, LowerUnavailable,
    NegativeExponent, NotPositive, ParameterOrder, SubsetNotFinite,
)
from ifs_model import IfsSystem, SubsetSpec, validate_subset
from linalg2 import (
    Matrix2, deflate, entry_svf, inflate, kappa, spectral_radius, svf,
    svf_exponent,
)
from word_tree import LetterTable, LogPartition, build_letter_table, log_svf, word_tree

logger = logging.getLogger(__name__)

EXACT = "exact-multiplicative"
FEKETE = "fekete-only"
KAPPA = "kappa-certified"
DELTA = "delta-certified"
TRUNCATED = "truncated-with-tail"


@dataclass
class PartitionSum:
    """Sum of phi^s over all words of one length, kept in log form"""

    subset: SubsetSpec
    s: float
    depth: int
    log_value_euclidean: float
    log_value_entry_sum: Optional[float]
    words_evaluated: int
    slack: float
    words_pruned: int = 0
    log_pruned_euclidean: float = -math.inf
    log_pruned_entry_sum: float = -math.inf

    @property
    def value_euclidean(self) -> float:
        return math.exp(self.log_value_euclidean)

    @property
    def value_entry_sum(self) -> Optional[float]:
        if self.log_value_entry_sum is None:
            return None
        return math.exp(self.log_value_entry_sum)

    @property
    def pruned_mass(self) -> float:
        return math.exp(self.log_pruned_euclidean)


@dataclass
class PressureBound:
    """Certified enclosure lower <= P_I(s) <= upper"""

    subset: SubsetSpec
    s: float
    depth: int
    lower: float
    upper: float
    method: str
    certified: bool = True
    words_used: int = 0
    components: Dict[str, Tuple[float, float]] = field(default_factory=dict)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_dict(self) -> Dict:
        return {
            "subset": self.subset.label(),
            "s": self.s,
            "depth": self.depth,
            "lower": self.lower,
            "upper": self.upper,
            "method": self.method,
            "certified": self.certified,
            "words_used": self.words_used,
        }


@dataclass
class DeltaBounds:
    """Interval on P_{I u J}(s) - P_I(s)"""

    lower_gap: float
    upper_gap: float
    certified: bool = True
    method: str = "kappa"


@dataclass
class QuasiConstant:
    """Empirical quasimultiplicativity constant; never certified"""

    c: float
    connector_length: int
    depth: int
    certified: bool = False


# ---------------------------------------------------------------------------
# Letters, depth policy and exact paths
# ---------------------------------------------------------------------------

def letter_table(system: IfsSystem, subset: SubsetSpec, merge: bool = True) -> LetterTable:
    validate_subset(system, subset)
    if not subset.is_finite:
        raise SubsetNotFinite("enumeration needs a finite subset; use truncate_with_tail",
                              {"subset": subset.label()})
    indices = subset.indices(system)
    if not indices:
        raise EmptySubset("subset has no indices in the system", {"subset": subset.label()})
    return build_letter_table(system.matrices(indices), indices, merge=merge)


def feasible_depth(table: LetterTable, budget: int) -> int:
    """Largest n with size^n <= budget, capped by the configured enumeration depth"""
    cap = int(get_numerics_config()["max_enumeration_depth"])
    k = table.size
    if k == 1:
        return cap
    n = int(math.log(budget) / math.log(k))
    while k ** (n + 1) <= budget:
        n += 1
    while n > 0 and k ** n > budget:
        n -= 1
    return min(n, cap)


def single_letter_pressure(m: Matrix2, weight: int, s: float) -> float:
    """Exact pressure of `weight` copies of one matrix (Gelfand radius)"""
    if s >= 2:
        return weight * abs(m.det) ** (s / 2.0)
    rho = spectral_radius(m)
    if s <= 1:
        return weight * rho ** s
    return weight * rho ** (2.0 - s) * abs(m.det) ** (s - 1.0)


def exact_pressure(table: LetterTable, s: float) -> Optional[float]:
    """Closed-form pressure where one applies, else None"""
    if s == 0:
        return float(table.cardinality)
    if s >= 2:
        return sum(w * abs(m.det) ** (s / 2.0) for m, w in zip(table.matrices, table.weights))
    if table.size == 1:
        return single_letter_pressure(table.matrices[0], table.weights[0], s)
    if table.diagonal:
        xs = [abs(m.a) for m in table.matrices]
        ys = [abs(m.d) for m in table.matrices]
        ws = table.weights
        if s <= 1:
            return max(sum(w * x ** s for x, w in zip(xs, ws)),
                       sum(w * y ** s for y, w in zip(ys, ws)))
        return max(sum(w * x * y ** (s - 1.0) for x, y, w in zip(xs, ys, ws)),
                   sum(w * y * x ** (s - 1.0) for x, y, w in zip(xs, ys, ws)))
    return None


def single_letter_lower(table: LetterTable, s: float) -> float:
    """Certified lower bound: pressure only grows with the index set"""
    return max(single_letter_pressure(m, w, s) for m, w in zip(table.matrices, table.weights))


def _multiplicativity_constant(kap: float, s: float) -> float:
    return (kap / 2.0) ** svf_exponent(s)


def _letter_entry_terms(table: LetterTable, s: float) -> float:
    return sum(w * entry_svf(m, s) for m, w in zip(table.matrices, table.weights))


def delta_enclosure(table: LetterTable, s: float) -> Optional[Tuple[float, float]]:
    """Exact core plus additive gaps for positive families of two or more letters"""
    if table.size < 2 or not table.positive or s > 2 or s <= 0:
        return None
    e = svf_exponent(s)
    singles = [single_letter_pressure(m, w, s) for m, w in zip(table.matrices, table.weights)]
    core = max(range(table.size), key=lambda i: singles[i])
    rest = [i for i in range(table.size) if i != core]
    core_matrix = table.matrices[core]
    gap_up = (2.0 / kappa([core_matrix])) ** e * sum(
        table.weights[i] * entry_svf(table.matrices[i], s) for i in rest)
    gap_low = (kappa(table.matrices) ** 2 / 4.0) ** e * max(singles[i] for i in rest)
    stages = 16
    return (deflate(singles[core] + gap_low, stages), inflate(singles[core] + gap_up, stages))


def _linear_log_sum(table: LetterTable, depth: int) -> float:
    """log 1^T (sum_i w_i A_i)^depth 1 for a positive family"""
    total = sum(w * m.as_array() for m, w in zip(table.matrices, table.weights))
    v = np.ones(2)
    log_scale = 0.0
    for _ in range(depth):
        v = total @ v
        top = float(v.max())
        v = v / top
        log_scale += math.log(top)
    return log_scale + math.log(float(v.sum()))


# ---------------------------------------------------------------------------
# Partition sums and enclosures
# ---------------------------------------------------------------------------

def _check_budget(table: LetterTable, subset: SubsetSpec, n: int, budget: int) -> None:
    if n < 1:
        raise ParameterOrder("word depth must be at least 1", {"depth": n})
    if table.size > 1 and table.size ** n > budget:
        raise BudgetExceeded(
            f"{table.size}^{n} words exceed the budget of {budget}",
            largest_feasible_depth=feasible_depth(table, budget),
            context={"subset": subset.label(), "depth": n, "budget": budget},
        )


def partition_sum(system: IfsSystem, subset: SubsetSpec, s: float, n: int,
                  budget: Optional[int] = None, threads: Optional[int] = None,
                  prune: bool = False) -> PartitionSum:
    if s < 0:
        raise NegativeExponent("pressure needs s >= 0", {"s": s})
    table = letter_table(system, subset)
    budget = budget or settings.default_budget
    _check_budget(table, subset, n, budget)
    part = word_tree(table).log_partition(s, n, threads or settings.threads, prune)
    return PartitionSum(
        subset=subset,
        s=s,
        depth=n,
        log_value_euclidean=part.log_spectral,
        log_value_entry_sum=part.log_entry,
        words_evaluated=part.words_evaluated,
        slack=(n + 8) * get_numerics_config()["slack"],
        words_pruned=part.words_pruned,
        log_pruned_euclidean=part.log_pruned_spectral,
        log_pruned_entry_sum=part.log_pruned_entry,
    )


def _root_bound(log_sum: float, n: int, upper: bool) -> float:
    value = math.exp(log_sum / n)
    return inflate(value, n + 8) if upper else deflate(value, n + 8)


def enumeration_bounds(table: LetterTable, s: float, n: int, threads: int = 1,
                       prune: bool = True) -> Tuple[Optional[float], float, LogPartition]:
    """(kappa lower or None, Fekete upper, raw sums) at depth n"""
    part = word_tree(table).log_partition(s, n, threads, prune)
    upper = _root_bound(part.log_spectral_upper, n, True)
    lower = None
    if table.positive and s <= 2:
        upper = min(upper, _root_bound(part.log_entry_upper, n, True))
        c_s = _multiplicativity_constant(kappa(table.matrices), s)
        lower = _root_bound(math.log(c_s) + part.log_entry, n, False)
    return lower, upper, part


def pressure_bound(system: IfsSystem, subset: SubsetSpec, s: float,
                   n: Optional[int] = None, budget: Optional[int] = None,
                   threads: Optional[int] = None, prune: bool = True,
                   require_lower: bool = False) -> PressureBound:
    """Intersection of every certified enclosure applicable to a finite subset"""
    if s < 0:
        raise NegativeExponent("pressure needs s >= 0", {"s": s})
    table = letter_table(system, subset)
    budget = budget or settings.default_budget
    threads = threads or settings.threads

    exact = exact_pressure(table, s)
    if exact is not None:
        return PressureBound(subset, s, 1, deflate(exact, 4), inflate(exact, 4), EXACT,
                             words_used=table.size, components={EXACT: (exact, exact)})

    if require_lower and not table.positive:
        raise LowerUnavailable("kappa lower bound needs a positive family",
                               {"subset": subset.label()})

    if n is None:
        n = feasible_depth(table, budget)
    _check_budget(table, subset, n, budget)

    components: Dict[str, Tuple[float, float]] = {}
    lower, upper, part = enumeration_bounds(table, s, n, threads, prune)
    components[KAPPA if lower is not None else FEKETE] = (lower or 0.0, upper)
    words = part.words_evaluated

    if table.positive:
        if s == 1.0:
            depth = int(get_numerics_config()["linear_fast_path_depth"])
            log_sum = _linear_log_sum(table, depth)
            c_s = _multiplicativity_constant(kappa(table.matrices), s)
            components["linear"] = (_root_bound(math.log(c_s) + log_sum, depth, False),
                                    _root_bound(log_sum, depth, True))
        delta = delta_enclosure(table, s)
        if delta is not None:
            components[DELTA] = delta
    else:
        single = deflate(single_letter_lower(table, s), 4)
        components["single-letter"] = (single, math.inf)

    best_lower = max(components, key=lambda k: components[k][0])
    lower = components[best_lower][0]
    upper = min(v[1] for v in components.values())
    if lower > upper:
        logger.warning(f"Enclosure ends crossed for {subset.label()} at s={s}: {lower} > {upper}")
        lower = upper
    if not table.positive:
        method = FEKETE
    elif best_lower == DELTA:
        method = DELTA
    else:
        method = KAPPA
    return PressureBound(subset, s, n, lower, upper, method, words_used=words,
                         components=components)


def truncate_with_tail(system: IfsSystem, subset: SubsetSpec, s: float, N: int,
                       n: Optional[int] = None, budget: Optional[int] = None,
                       threads: Optional[int] = None) -> PressureBound:
    """Enclosure of a cofinite subset from its truncation at N plus the closed-form tail"""
    validate_subset(system, subset)
    if subset.is_finite:
        return pressure_bound(system, subset, s, n, budget, threads)
    if s <= 0:
        raise NegativeExponent("tail bounds need s > 0", {"s": s})
    N = max(N, max(subset.base, default=0), subset.tail_from,
            system.tail.start_index if system.tail else 0)
    trunc = subset.truncate(system, N)
    mats = system.matrices(trunc.indices(system))
    diagonal = system.tail.diagonal and all(m.is_diagonal() for m in mats)
    if not (system.positivity_flag or diagonal):
        raise NotPositive("tail control needs a positive or diagonal family",
                          {"subset": subset.label(), "system": system.name})

    bound = pressure_bound(system, trunc, s, n, budget, threads)
    tail = system.tail.tail_sum(max(N, subset.tail_from - 1), s)
    if diagonal or s > 2:
        factor = 1.0
    else:
        factor = (2.0 / kappa(mats)) ** svf_exponent(s)
    upper = bound.upper + inflate(factor * tail, 4) if math.isfinite(tail) else math.inf
    components = dict(bound.components)
    components[TRUNCATED] = (bound.lower, upper)
    return PressureBound(subset, s, bound.depth, bound.lower, upper, TRUNCATED,
                         words_used=bound.words_used, components=components)


def delta_bounds(system: IfsSystem, I: SubsetSpec, J: Optional[SubsetSpec], s: float,
                 constants: Optional[Tuple[float, int, float]] = None,
                 N: Optional[int] = None, estimate: bool = False) -> DeltaBounds:
    """Additive interval on P_{I u J}(s) - P_I(s)

    `constants` = (c, K, P_I upper) for non-positive families: a quasimultiplicativity
    constant c with connectors of length <= K.
    """
    if J is None:
        return DeltaBounds(0.0, 0.0)
    validate_subset(system, I)
    validate_subset(system, J)
    if not I.disjoint(J):
        raise ParameterOrder("I and J must be disjoint", {"I": I.label(), "J": J.label()})
    if s < 0:
        raise NegativeExponent("pressure needs s >= 0", {"s": s})
    cap = N or max(list(I.base) + list(J.base) + [J.tail_from or 0, I.tail_from or 0]) + \
        int(get_numerics_config()["delta_margin"])
    i_idx = I.indices(system, cap)
    j_idx = J.indices(system, cap)
    j_mats = system.matrices(j_idx)
    j_tail = J.tail_from is not None

    if s >= 2:
        gap = sum(abs(m.det) ** (s / 2.0) for m in j_mats)
        extra = system.tail.tail_sum(max(cap, J.tail_from - 1), s) if j_tail else 0.0
        return DeltaBounds(deflate(gap, 4), inflate(gap + extra, 4), True, "determinant")

    i_mats = system.matrices(i_idx)
    all_positive = all(m.is_positive() for m in i_mats + j_mats) and \
        (not (j_tail or I.tail_from is not None) or system.positivity_flag)
    if all_positive:
        e = svf_exponent(s)
        terms = sum(entry_svf(m, s) for m in j_mats)
        if j_tail:
            terms += system.tail.tail_sum(max(cap, J.tail_from - 1), s)
        upper_gap = (2.0 / kappa(i_mats)) ** e * terms
        j_finite = SubsetSpec(tuple(j_idx))
        p_j = pressure_bound(system, j_finite, s).lower
        lower_gap = (kappa(i_mats + j_mats) ** 2 / 4.0) ** e * p_j
        return DeltaBounds(deflate(lower_gap, 8), inflate(upper_gap, 8), True, "kappa")

    if constants is None:
        if not estimate:
            raise ConstantsUnavailable("non-positive family needs quasimultiplicativity constants",
                                       {"I": I.label(), "s": s})
        quasi = estimate_quasimultiplicative_constant(system, SubsetSpec(tuple(i_idx)), s)
        p_i = pressure_bound(system, SubsetSpec(tuple(i_idx)), s).upper
        constants = (quasi.c, quasi.connector_length, p_i)
        certified = False
    else:
        certified = True
    c, K, p_i = constants
    c_big = K * max(1.0, p_i ** K) / c
    upper_gap = c_big * sum(svf(m, s) for m in j_mats)
    if j_tail:
        upper_gap = math.inf
    return DeltaBounds(0.0, inflate(upper_gap, 8), certified, "quasimultiplicative")


def estimate_quasimultiplicative_constant(system: IfsSystem, subset: SubsetSpec, s: float,
                                          depth: int = 2,
                                          connector_length: int = 2) -> QuasiConstant:
    """min over word pairs (u, v) of max over connectors g of phi(u g v) / (phi(u) phi(v))"""
    connector_length = min(connector_length, 3)
    table = letter_table(system, subset, merge=True)
    letters = [m.as_array() for m in table.matrices]

    def words_up_to(length: int, include_empty: bool) -> np.ndarray:
        found = [np.eye(2)] if include_empty else []
        for n in range(1, length + 1):
            for word in itertools.product(letters, repeat=n):
                prod = np.eye(2)
                for m in word:
                    prod = prod @ m
                found.append(prod)
        return np.array(found)

    def log_phi(mats: np.ndarray) -> np.ndarray:
        scale = np.max(np.abs(mats), axis=(-2, -1))
        norm = mats / scale[..., None, None]
        a, b, c, d = norm[..., 0, 0], norm[..., 0, 1], norm[..., 1, 0], norm[..., 1, 1]
        p, q, r = a * a + c * c, b * b + d * d, a * b + c * d
        log_a1 = 0.5 * np.log(0.5 * (p + q) + np.hypot(0.5 * (p - q), r)) + np.log(scale)
        log_det = np.log(np.abs(a * d - b * c)) + 2.0 * np.log(scale)
        return log_svf(log_a1, log_det, s)

    words = words_up_to(depth, False)
    connectors = words_up_to(connector_length, True)
    base = log_phi(words)
    left = np.einsum("uij,gjk->ugik", words, connectors)
    full = np.einsum("ugij,vjk->ugvik", left, words)
    ratios = log_phi(full) - base[:, None, None] - base[None, None, :]
    c = float(np.exp(ratios.max(axis=1).min()))
    return QuasiConstant(c=min(c, 1.0), connector_length=connector_length, depth=depth)
