"""
IFS model
Finite and infinite planar self-affine systems, index subsets, parametric tail
generators with closed-form tail sums, built-in galleries and separation /
irreducibility checks
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from affinity_config import get_gallery_config
from errors import (
    ConfigParse, EmptySubset, FileIO, IndexNotInSystem, NotContracting,
    OverlapDetected, ParameterOrder, PositivityNotAchieved, RootTooLarge,
    TailUnavailable,
)
from linalg2 import (
    Matrix2, certified_root, eigenvectors, inflate, is_eigenvector, kappa, svf,
)

logger = logging.getLogger(__name__)

SEPARATIONS = ("none", "OSC", "SOSC")
BOX_HORIZON = 48
BOX_RESOLUTION = 1e-10

Box = Tuple[float, float, float, float]


@dataclass(frozen=True)
class AffineMap:
    """x -> linear x + translation"""

    linear: Matrix2
    translation: Tuple[float, float] = (0.0, 0.0)

    def image_box(self) -> Box:
        """Axis-aligned bounding box (x0, x1, y0, y1) of the image of the unit square"""
        m = self.linear
        tx, ty = self.translation
        x0 = tx + min(0.0, m.a) + min(0.0, m.b)
        x1 = tx + max(0.0, m.a) + max(0.0, m.b)
        y0 = ty + min(0.0, m.c) + min(0.0, m.d)
        y1 = ty + max(0.0, m.c) + max(0.0, m.d)
        return (x0, x1, y0, y1)


def _box_height(m: Matrix2) -> float:
    return max(0.0, m.c) + max(0.0, m.d) - min(0.0, m.c) - min(0.0, m.d)


def _geometric_from(q: float, first: int) -> float:
    """sum_{k >= first} q^k for 0 <= q < 1"""
    if q >= 1.0:
        return math.inf
    return q ** first / (1.0 - q)


# ---------------------------------------------------------------------------
# Tail generators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailGenerator:
    """Closed-form family A_n, n >= start_index, with certified tail sums

    `term(n, s)` is the summand controlled by the tail bounds: the entry-sum
    version of the singular value function for positive families, the exact
    singular value function for diagonal ones.
    """

    start_index: int = 5
    x_position: float = 0.5

    kind = "abstract"
    diagonal = False
    positive = False

    def matrix(self, n: int) -> Matrix2:
        raise NotImplementedError

    def params(self) -> Dict[str, Any]:
        raise NotImplementedError

    def term(self, n: int, s: float) -> float:
        m = self.matrix(n)
        if self.positive and s <= 2:
            entry = m.a + m.b + m.c + m.d
            if s <= 1:
                return entry ** s
            return entry ** (2.0 - s) * abs(m.det) ** (s - 1.0)
        return svf(m, s)

    def tail_sum(self, N: int, s: float) -> float:
        """Upper bound on sum_{n > N, n >= start_index} term(n, s)"""
        raise NotImplementedError

    def first_after(self, N: int) -> int:
        return max(N + 1, self.start_index)

    def height_tail(self, n: int) -> float:
        """Upper bound on the summed image heights of A_k, k >= n"""
        # term(k, 1) dominates the height for positive and diagonal families
        return self.tail_sum(n - 1, 1.0)

    def _top(self, n: int) -> float:
        top = 1.0
        for k in range(self.start_index, n):
            top -= 2.0 * _box_height(self.matrix(k))
        return top

    def translation(self, n: int) -> Tuple[float, float]:
        """Images stacked downward from y = 1 with gaps equal to their heights"""
        m = self.matrix(n)
        return (self.x_position - min(0.0, m.a) - min(0.0, m.b),
                self._top(n) - max(0.0, m.c) - max(0.0, m.d))

    def remainder_box(self, n: int) -> Box:
        """Box enclosing every image of A_k, k >= n (image widths never grow along a family)"""
        m = self.matrix(n)
        width = max(0.0, m.a) + max(0.0, m.b) - min(0.0, m.a) - min(0.0, m.b)
        top = self._top(n)
        return (self.x_position, self.x_position + width, top - 2.0 * self.height_tail(n), top)

    def affine_map(self, n: int) -> AffineMap:
        return AffineMap(self.matrix(n), self.translation(n))

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.kind, "params": self.params(), "start_index": self.start_index}


@dataclass(frozen=True)
class PaperFamily51Tail(TailGenerator):
    """A_n = [[beta^-n, b gamma^-n], [beta^-n, d gamma^-n]]"""

    beta: float = 5.0
    gamma: float = 100.0
    b: float = 0.6
    d: float = 0.9

    kind = "paper51"
    positive = True

    def matrix(self, n: int) -> Matrix2:
        bn = self.beta ** (-n)
        gn = self.gamma ** (-n)
        return Matrix2(bn, self.b * gn, bn, self.d * gn)

    def params(self) -> Dict[str, Any]:
        return {"beta": self.beta, "gamma": self.gamma, "b": self.b, "d": self.d,
                "x_position": self.x_position}

    def tail_sum(self, N: int, s: float) -> float:
        if s <= 0:
            return math.inf
        m0 = self.first_after(N)
        ib, ig = 1.0 / self.beta, 1.0 / self.gamma
        bd = self.b + self.d
        if s <= 1:
            # (x + y)^s <= x^s + y^s
            total = (2.0 ** s * _geometric_from(ib ** s, m0)
                     + bd ** s * _geometric_from(ig ** s, m0))
        elif s <= 2:
            det_part = (self.d - self.b) ** (s - 1.0)
            q1 = ib * ig ** (s - 1.0)
            q2 = ig * ib ** (s - 1.0)
            total = det_part * (2.0 ** (2.0 - s) * _geometric_from(q1, m0)
                                + bd ** (2.0 - s) * _geometric_from(q2, m0))
        else:
            total = (self.d - self.b) ** (s / 2.0) * _geometric_from((ib * ig) ** (s / 2.0), m0)
        return inflate(total, 8)


@dataclass(frozen=True)
class GeometricSelfSimilarTail(TailGenerator):
    """Ratios a_n = base^-(n - offset)

    With x_ratio unset the maps are similarities a_n Id; otherwise they are
    diag(x_ratio, a_n), the vertical-line family of the isolated-point gallery.
    """

    base: float = 4.0
    offset: int = 1
    x_ratio: Optional[float] = None

    kind = "geometric-self-similar"
    diagonal = True

    def ratio(self, n: int) -> float:
        return self.base ** (-(n - self.offset))

    def matrix(self, n: int) -> Matrix2:
        a = self.ratio(n)
        return Matrix2.diag(a if self.x_ratio is None else self.x_ratio, a)

    def params(self) -> Dict[str, Any]:
        return {"base": self.base, "offset": self.offset, "x_ratio": self.x_ratio,
                "x_position": self.x_position}

    def tail_sum(self, N: int, s: float) -> float:
        m0 = self.first_after(N)
        first = m0 - self.offset
        if self.x_ratio is None:
            if s <= 0:
                return math.inf
            total = _geometric_from(self.base ** (-s), first)
        elif s <= 1:
            return math.inf
        elif s <= 2:
            total = self.x_ratio * _geometric_from(self.base ** (-(s - 1.0)), first)
        else:
            total = self.x_ratio ** (s / 2.0) * _geometric_from(self.base ** (-s / 2.0), first)
        return inflate(total, 8)

    def height_tail(self, n: int) -> float:
        return inflate(_geometric_from(1.0 / self.base, max(n, self.start_index) - self.offset), 8)

    def root(self) -> Tuple[float, float]:
        """Certified bracket for the similarity root of sum_{n >= start} a_n^s = 1"""
        first = self.start_index - self.offset

        def excess(s: float) -> float:
            return _geometric_from(self.base ** (-s), first) - 1.0

        hi = 1.0
        while excess(hi) >= 0:
            hi *= 2.0
        return certified_root(excess, 1e-9, hi)


@dataclass(frozen=True)
class HarmonicPowerTail(TailGenerator):
    """Similarities r_n Id with r_n = scale * n^-2, finite pressure only for s > 1/2"""

    scale: float = 0.25

    kind = "harmonic-power"
    diagonal = True

    def matrix(self, n: int) -> Matrix2:
        r = self.scale * n ** -2.0
        return Matrix2.diag(r, r)

    def params(self) -> Dict[str, Any]:
        return {"scale": self.scale, "x_position": self.x_position}

    def tail_sum(self, N: int, s: float) -> float:
        if 2.0 * s <= 1.0:
            return math.inf
        m0 = self.first_after(N)
        # sum_{n >= m0} n^-p <= m0^-p + integral_{m0}^inf x^-p dx
        p = 2.0 * s
        total = self.scale ** s * (m0 ** -p + m0 ** (1.0 - p) / (p - 1.0))
        return inflate(total, 8)


TAIL_FAMILIES = {
    PaperFamily51Tail.kind: PaperFamily51Tail,
    GeometricSelfSimilarTail.kind: GeometricSelfSimilarTail,
    HarmonicPowerTail.kind: HarmonicPowerTail,
}


def tail_from_dict(data: Dict[str, Any]) -> TailGenerator:
    family = data.get("family")
    if family not in TAIL_FAMILIES:
        raise ConfigParse(f"unknown tail family: {family}", {"known": sorted(TAIL_FAMILIES)})
    params = dict(data.get("params", {}))
    try:
        return TAIL_FAMILIES[family](start_index=int(data.get("start_index", 5)), **params)
    except TypeError as e:
        raise ConfigParse(f"bad parameters for tail family {family}: {e}", {"params": params})


# ---------------------------------------------------------------------------
# Subsets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubsetSpec:
    """Finite index set, or base set plus every generated index >= tail_from"""

    base: Tuple[int, ...] = ()
    tail_from: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(sorted(set(int(i) for i in self.base))))
        if not self.base and self.tail_from is None:
            raise EmptySubset("subset is empty")
        if any(i < 1 for i in self.base):
            raise IndexNotInSystem("indices are natural numbers", {"base": list(self.base)})

    @classmethod
    def of(cls, indices: Iterable[int]) -> "SubsetSpec":
        return cls(tuple(indices))

    @classmethod
    def cofinite(cls, base: Iterable[int], tail_from: int) -> "SubsetSpec":
        return cls(tuple(base), int(tail_from))

    @property
    def is_finite(self) -> bool:
        return self.tail_from is None

    def contains(self, i: int) -> bool:
        return i in self.base or (self.tail_from is not None and i >= self.tail_from)

    def indices(self, system: "IfsSystem", up_to: Optional[int] = None) -> List[int]:
        """Member indices present in the system, cofinite tails cut at `up_to`"""
        found = [i for i in self.base if up_to is None or i <= up_to]
        if self.tail_from is not None and up_to is not None:
            found.extend(i for i in system.indices_up_to(up_to)
                         if i >= self.tail_from and i not in self.base)
        return sorted(set(found))

    def truncate(self, system: "IfsSystem", N: int) -> "SubsetSpec":
        return SubsetSpec(tuple(self.indices(system, N)))

    def union(self, other: "SubsetSpec") -> "SubsetSpec":
        tails = [t for t in (self.tail_from, other.tail_from) if t is not None]
        return SubsetSpec(self.base + other.base, min(tails) if tails else None)

    def issubset(self, other: "SubsetSpec") -> bool:
        if self.tail_from is not None:
            if other.tail_from is None:
                return False
            gap = range(self.tail_from, other.tail_from)
            if any(i not in other.base for i in gap):
                return False
        return all(other.contains(i) for i in self.base)

    def disjoint(self, other: "SubsetSpec") -> bool:
        if self.tail_from is not None and other.tail_from is not None:
            return False
        return not any(other.contains(i) for i in self.base) and \
            not any(self.contains(i) for i in other.base)

    def label(self) -> str:
        body = "{" + ",".join(str(i) for i in self.base) + "}"
        if self.tail_from is None:
            return body
        return (body + "+" if self.base else "") + f"tail({self.tail_from})"

    def sort_key(self) -> Tuple:
        return (self.tail_from is not None, len(self.base), self.base, self.tail_from or 0)

    def __str__(self) -> str:
        return self.label()


# ---------------------------------------------------------------------------
# Systems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IfsSystem:
    """Indexed planar self-affine IFS: explicit maps plus an optional tail generator"""

    explicit: Tuple[Tuple[int, AffineMap], ...]
    tail: Optional[TailGenerator] = None
    positivity_flag: Optional[bool] = None
    declared_separation: str = "none"
    name: str = "custom"
    params: Tuple[Tuple[str, Any], ...] = field(default=(), compare=False)

    def __post_init__(self):
        explicit = tuple((int(i), m) for i, m in self.explicit)
        object.__setattr__(self, "explicit", explicit)
        indices = [i for i, _ in explicit]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ParameterOrder("explicit indices must be strictly increasing", {"indices": indices})
        if self.tail is not None and indices and indices[-1] >= self.tail.start_index:
            raise ParameterOrder("explicit indices overlap the tail",
                                 {"last_explicit": indices[-1], "tail_start": self.tail.start_index})
        if self.declared_separation not in SEPARATIONS:
            raise ConfigParse(f"unknown separation {self.declared_separation}")
        for i, m in explicit:
            if m.linear.alpha1 >= 1.0:
                raise NotContracting(f"map {i} is not a contraction",
                                     {"index": i, "alpha1": m.linear.alpha1})
        if self.tail is not None and self.tail.matrix(self.tail.start_index).alpha1 >= 1.0:
            raise NotContracting("tail generator is not contracting",
                                 {"start_index": self.tail.start_index})
        all_positive = all(m.linear.is_positive() for _, m in explicit) and \
            (self.tail is None or self.tail.positive)
        if self.positivity_flag is None:
            object.__setattr__(self, "positivity_flag", all_positive)
        elif self.positivity_flag and not all_positive:
            raise PositivityNotAchieved("positivity flag set on a family with non-positive entries",
                                        {"name": self.name})

    @property
    def parameters(self) -> Dict[str, Any]:
        return dict(self.params)

    @property
    def explicit_indices(self) -> List[int]:
        return [i for i, _ in self.explicit]

    def has_index(self, i: int) -> bool:
        if self.tail is not None and i >= self.tail.start_index:
            return True
        return i in self.explicit_indices

    def indices_up_to(self, N: int) -> List[int]:
        found = [i for i in self.explicit_indices if i <= N]
        if self.tail is not None:
            found.extend(range(self.tail.start_index, N + 1))
        return found

    def affine_map(self, i: int) -> AffineMap:
        for j, m in self.explicit:
            if j == i:
                return m
        if self.tail is not None and i >= self.tail.start_index:
            return self.tail.affine_map(i)
        raise IndexNotInSystem(f"index {i} is not in system {self.name}", {"index": i})

    def matrix(self, i: int) -> Matrix2:
        for j, m in self.explicit:
            if j == i:
                return m.linear
        if self.tail is not None and i >= self.tail.start_index:
            return self.tail.matrix(i)
        raise IndexNotInSystem(f"index {i} is not in system {self.name}", {"index": i})

    def matrices(self, indices: Iterable[int]) -> List[Matrix2]:
        return [self.matrix(i) for i in indices]

    def is_diagonal(self, indices: Iterable[int]) -> bool:
        return all(self.matrix(i).is_diagonal() for i in indices)


def validate_subset(system: IfsSystem, subset: SubsetSpec) -> SubsetSpec:
    missing = [i for i in subset.base if not system.has_index(i)]
    if missing:
        raise IndexNotInSystem(f"indices {missing} are not in system {system.name}",
                               {"indices": missing, "system": system.name})
    if subset.tail_from is not None and system.tail is None:
        raise TailUnavailable("cofinite subset on a system without a tail generator",
                              {"subset": subset.label(), "system": system.name})
    return subset


# ---------------------------------------------------------------------------
# Galleries
# ---------------------------------------------------------------------------

CONJUGATOR = Matrix2(1.0, -1.0, 0.5, 0.5)
CONJUGATOR_INV = Matrix2(0.5, 1.0, -0.5, 1.0)


def paper51_head_matrix(beta: float, gamma: float) -> Matrix2:
    """Conjugate of diag(1/beta, 1/gamma) by [[1, -1], [1/2, 1/2]]"""
    p, q = 1.0 / beta, 1.0 / gamma
    return Matrix2(0.5 * (p + q), p - q, 0.25 * (p - q), 0.5 * (p + q))


def paper51_crucial_bound(beta: float, gamma: float, b: float, d: float,
                          c: float, eta: float) -> Dict[str, float]:
    """Closed-form pieces of the I' pressure bound at s = log 3 / log beta"""
    s = math.log(3.0) / math.log(beta)
    head = 2.0 / beta ** s
    beta_tail = (8.0 / c) ** s * beta ** (-5.0 * s) / (1.0 - beta ** (-s))
    gamma_tail = (4.0 / c) ** s * (b + d) ** s * gamma ** (-5.0 * s) / (1.0 - gamma ** (-s))
    simplified_middle = eta ** s / beta ** (3.0 * s)
    return {
        "s": s,
        "head": head,
        "beta_tail": beta_tail,
        "gamma_tail": gamma_tail,
        "direct": head + beta_tail + gamma_tail,
        "simplified": head + simplified_middle + gamma_tail,
    }


def paper51_conditions(beta: float, gamma: float, b: float, d: float,
                       c: float, eta: float) -> Dict[str, bool]:
    """Standing assumptions (i)-(iv) of the gallery plus the I' bound"""
    head = paper51_head_matrix(beta, gamma)
    tail = PaperFamily51Tail(beta=beta, gamma=gamma, b=b, d=d)
    a5 = tail.matrix(5)
    positive = head.is_positive()
    column = positive and kappa([head, a5]) >= c
    verdict = check_paper51_eigenstructure(beta, gamma, b, d, range(5, 5 + BOX_HORIZON))
    return {
        "column_ratio": column,
        "head_positive": positive,
        "head_dominates_a5": head.dominates(a5),
        "irreducibility": verdict,
        "crucial_bound": paper51_crucial_bound(beta, gamma, b, d, c, eta)["direct"] < 1.0,
    }


def _auto_gamma(beta: float, b: float, d: float, c: float, eta: float) -> float:
    for k in range(1, 17):
        gamma = 10.0 ** k
        if gamma <= beta:
            continue
        if all(paper51_conditions(beta, gamma, b, d, c, eta).values()):
            return gamma
    raise PositivityNotAchieved("no power of ten up to 1e16 satisfies the standing assumptions",
                                {"beta": beta, "b": b, "d": d, "c": c, "eta": eta})


def build_paper_family_51(beta: Optional[float] = None, gamma: Optional[float] = None,
                          b: Optional[float] = None, d: Optional[float] = None,
                          c: Optional[float] = None, eta: Optional[float] = None) -> IfsSystem:
    """Three equal conjugated-diagonal maps plus the tail A_n, n >= 5 (index 4 absent)"""
    defaults = get_gallery_config("paper51")
    beta = float(defaults["beta"] if beta is None else beta)
    b = float(defaults["b"] if b is None else b)
    d = float(defaults["d"] if d is None else d)
    c = float(defaults["c"] if c is None else c)
    eta = float(defaults["eta"] if eta is None else eta)
    gamma = defaults["gamma"] if gamma is None else gamma

    context = {"beta": beta, "gamma": gamma, "b": b, "d": d, "c": c, "eta": eta}
    if not beta > 3.0:
        raise ParameterOrder("need beta > 3", context)
    if not 0.5 < b < d < 1.0:
        raise ParameterOrder("need 1/2 < b < d < 1", context)
    if not (0.0 < c < 1.0 and 0.0 < eta < 1.0):
        raise ParameterOrder("need c and eta in (0, 1)", context)
    if gamma is None:
        gamma = _auto_gamma(beta, b, d, c, eta)
        logger.info(f"Auto-selected gamma = {gamma:g} for beta = {beta:g}")
    gamma = float(gamma)
    context["gamma"] = gamma
    if not gamma > beta:
        raise ParameterOrder("need gamma > beta", context)

    head = paper51_head_matrix(beta, gamma)
    if not head.is_positive():
        failing = [name for name, v in zip(("a", "b", "c", "d"), head.entries()) if v <= 0]
        raise PositivityNotAchieved(f"head matrix entries {failing} are not positive",
                                    dict(context, failing_entries=failing))

    conditions = paper51_conditions(beta, gamma, b, d, c, eta)
    # head images share the left column with equal gaps; beta > 3 keeps each
    # box below height 1/3 and width 1/2, clear of the tail column at x = 1/2
    step = (1.0 - _box_height(head)) / 2.0
    explicit = tuple((i, AffineMap(head, (0.0, (i - 1) * step))) for i in (1, 2, 3))
    tail = PaperFamily51Tail(start_index=get_gallery_config("paper51").get("tail_start", 5),
                             beta=beta, gamma=gamma, b=b, d=d)
    params = tuple(sorted(dict(context, conditions=tuple(sorted(conditions.items()))).items()))
    system = IfsSystem(
        explicit=explicit,
        tail=tail,
        positivity_flag=all(conditions.values()),
        declared_separation="SOSC",
        name="paper51",
        params=params,
    )
    if not verify_sosc_rectangles(system, SubsetSpec((1, 2, 3), tail.start_index)):
        raise OverlapDetected("conjugated-diagonal gallery images overlap", context)
    return system


def build_isolated_point_family(tail_base: Optional[float] = None,
                                x_ratio: Optional[float] = None) -> IfsSystem:
    """Two heads diag(1/3, 1/4) on the left edge, tail diag(1/3, a_n) on the right"""
    defaults = get_gallery_config("isolated52")
    tail_base = float(defaults["tail_base"] if tail_base is None else tail_base)
    x_ratio = float(defaults["x_ratio"] if x_ratio is None else x_ratio)
    head_ratio = float(defaults["head_ratio"])
    tail = GeometricSelfSimilarTail(start_index=3, x_position=2.0 / 3.0,
                                    base=tail_base, offset=1, x_ratio=x_ratio)
    first = tail.ratio(tail.start_index)
    if not 0.0 < first < x_ratio or tail_base <= 1.0:
        raise ParameterOrder("tail ratios must decrease and stay below the x ratio",
                             {"tail_base": tail_base, "first_ratio": first})
    s0_lo, s0_hi = tail.root()
    threshold = math.log(2.0) / math.log(1.0 / head_ratio)
    if s0_hi >= threshold:
        raise RootTooLarge("tail similarity root is not below the head dimension",
                           {"s0": s0_hi, "threshold": threshold})
    head = Matrix2.diag(x_ratio, head_ratio)
    system = IfsSystem(
        explicit=((1, AffineMap(head, (0.0, 0.0))), (2, AffineMap(head, (0.0, 0.5)))),
        tail=tail,
        declared_separation="SOSC",
        name="isolated52",
        params=(("s0", (s0_lo, s0_hi)), ("tail_base", tail_base), ("x_ratio", x_ratio)),
    )
    if not verify_sosc_rectangles(system, SubsetSpec((1, 2), 3)):
        raise OverlapDetected("isolated-point gallery images overlap", {"tail_base": tail_base})
    return system


def build_selfsimilar_family(ratios: Optional[Sequence[float]] = None,
                             anisotropy: Optional[float] = None) -> IfsSystem:
    """Diagonal maps placed left to right along the x-axis"""
    if ratios is None:
        ratios = get_gallery_config("selfsimilar")["ratios"]
    ratios = [float(r) for r in ratios]
    if not ratios or any(not 0.0 < r < 1.0 for r in ratios):
        raise ParameterOrder("similarity ratios must lie in (0, 1)", {"ratios": ratios})
    if anisotropy is not None and not 0.0 < anisotropy <= 1.0:
        raise ParameterOrder("anisotropy must lie in (0, 1]", {"anisotropy": anisotropy})
    total = sum(ratios)
    gap = max(0.0, 1.0 - total) / len(ratios)
    explicit = []
    x = 0.5 * gap
    for i, r in enumerate(ratios, start=1):
        linear = Matrix2.diag(r, r if anisotropy is None else r * anisotropy)
        explicit.append((i, AffineMap(linear, (x, 0.0))))
        x += r + gap
    return IfsSystem(
        explicit=tuple(explicit),
        declared_separation="OSC" if total <= 1.0 else "none",
        name="selfsimilar",
        params=(("anisotropy", anisotropy), ("ratios", tuple(ratios))),
    )


GALLERIES = {
    "paper51": build_paper_family_51,
    "isolated52": build_isolated_point_family,
    "selfsimilar": build_selfsimilar_family,
}


def build_gallery(name: str, params: Optional[Dict[str, Any]] = None) -> IfsSystem:
    if name not in GALLERIES:
        raise ConfigParse(f"unknown gallery: {name}", {"known": sorted(GALLERIES)})
    try:
        return GALLERIES[name](**(params or {}))
    except TypeError as e:
        raise ConfigParse(f"bad parameters for gallery {name}: {e}", {"params": params})


# ---------------------------------------------------------------------------
# Irreducibility and separation
# ---------------------------------------------------------------------------

@dataclass
class IrreducibilityVerdict:
    verdict: str  # strongly-irreducible | irreducible | reducible | undetermined
    witness: Optional[Tuple[float, float]] = None
    reason: str = ""


def _eigen_roots(beta: float, gamma: float, b: float, d: float, n: int) -> Tuple[float, float]:
    # roots of b v^2 + v (R - d) - R = 0 with R = (gamma / beta)^n
    R = (gamma / beta) ** n
    disc = math.sqrt((R - d) ** 2 + 4.0 * b * R)
    v_minus = (d - R - disc) / (2.0 * b)
    v_plus = -R / (b * v_minus)
    return v_plus, v_minus


def check_paper51_eigenstructure(beta: float, gamma: float, b: float, d: float,
                                 tail_indices: Iterable[int]) -> bool:
    """No tail matrix shares an eigenvector with the head or with another tail matrix"""
    head = paper51_head_matrix(beta, gamma)
    tail = PaperFamily51Tail(beta=beta, gamma=gamma, b=b, d=d)
    head_vectors = [(1.0, 0.5), (-1.0, 0.5)]
    if not all(is_eigenvector(head, v) for v in head_vectors):
        return False
    tail_indices = sorted(set(tail_indices))
    for n in tail_indices:
        if any(is_eigenvector(tail.matrix(n), v) for v in head_vectors):
            return False
    # v_- separates numerically; v_+ is strictly monotone in n whenever 0 < b != d
    minus = [_eigen_roots(beta, gamma, b, d, n)[1] for n in tail_indices]
    minus_distinct = all(abs(y - x) > 1e-12 * abs(y) for x, y in zip(minus, minus[1:]))
    return minus_distinct and 0.0 < b != d and gamma > beta


def _shared_eigenvector(mats: List[Matrix2]) -> Optional[Tuple[float, float]]:
    distinct = list(dict.fromkeys(mats))
    pivots = [m for m in distinct if not m.is_scalar()]
    if not pivots:
        return (1.0, 0.0)
    for v in eigenvectors(pivots[0]) or []:
        if all(is_eigenvector(m, v) for m in pivots[1:]):
            return v
    return None


def check_irreducibility(system: IfsSystem, subset: SubsetSpec,
                         horizon: int = BOX_HORIZON) -> IrreducibilityVerdict:
    validate_subset(system, subset)
    tail = system.tail
    cap = max(list(subset.base) + [tail.start_index if tail else 0]) + horizon
    indices = subset.indices(system, cap)
    mats = system.matrices(indices)
    distinct = list(dict.fromkeys(mats))

    if len(distinct) == 1:
        vectors = eigenvectors(distinct[0])
        if vectors is None or vectors:
            witness = vectors[0] if vectors else (1.0, 0.0)
            return IrreducibilityVerdict("reducible", witness, "copies of one matrix")
        return IrreducibilityVerdict("irreducible", None, "single matrix without real eigenvectors")

    if isinstance(tail, PaperFamily51Tail):
        tail_part = [i for i in indices if i >= tail.start_index]
        if not tail_part:
            witness = _shared_eigenvector(mats)
            return IrreducibilityVerdict("reducible", witness, "copies of one matrix")
        ok = check_paper51_eigenstructure(tail.beta, tail.gamma, tail.b, tail.d, tail_part)
        if ok:
            return IrreducibilityVerdict("strongly-irreducible", None,
                                         "no shared eigenvectors; positive family")
        return IrreducibilityVerdict("undetermined", None, "eigenvector separation failed")

    witness = _shared_eigenvector(mats)
    if witness is not None:
        if subset.is_finite or (all(m.is_diagonal() for m in mats) and tail.diagonal):
            return IrreducibilityVerdict("reducible", witness, "shared eigenvector")
        return IrreducibilityVerdict("undetermined", None, "truncation reducible")
    if all(m.is_positive() for m in distinct):
        return IrreducibilityVerdict("strongly-irreducible", None, "irreducible positive family")
    return IrreducibilityVerdict("irreducible", None, "no shared eigenvector")


def _boxes_disjoint(first: Box, second: Box) -> bool:
    return first[1] < second[0] or second[1] < first[0] or \
        first[3] < second[2] or second[3] < first[2]


def verify_sosc_rectangles(system: IfsSystem, subset: SubsetSpec,
                           horizon: int = BOX_HORIZON) -> bool:
    """Sufficient check: image boxes pairwise disjoint and inside the unit square

    Tail images thinner than BOX_RESOLUTION, and for cofinite subsets every
    index past the horizon, are covered by one remainder box.
    """
    validate_subset(system, subset)
    tail = system.tail
    cap = max(list(subset.base) + [tail.start_index if tail else 0]) + horizon
    boxes = []
    rest_from = None
    for i in subset.indices(system, cap):
        in_tail = tail is not None and i >= tail.start_index
        if in_tail and (rest_from is not None or _box_height(tail.matrix(i)) < BOX_RESOLUTION):
            rest_from = i if rest_from is None else rest_from
            continue
        boxes.append(system.affine_map(i).image_box())
    if rest_from is None and subset.tail_from is not None:
        rest_from = cap + 1
    if rest_from is not None:
        boxes.append(tail.remainder_box(rest_from))
    edge = 1e-12
    for box in boxes:
        if box[0] < -edge or box[1] > 1.0 + edge or box[2] < -edge or box[3] > 1.0 + edge:
            return False
    for k, first in enumerate(boxes):
        for second in boxes[k + 1:]:
            if not _boxes_disjoint(first, second):
                return False
    return True


# ---------------------------------------------------------------------------
# System description files
# ---------------------------------------------------------------------------

def system_to_dict(system: IfsSystem) -> Dict[str, Any]:
    return {
        "name": system.name,
        "maps": [
            {"index": i, "matrix": list(m.linear.entries()), "translation": list(m.translation)}
            for i, m in system.explicit
        ],
        "tail": system.tail.to_dict() if system.tail else None,
        "separation": system.declared_separation,
        "positivity": system.positivity_flag,
        "params": {k: _jsonable(v) for k, v in system.params},
    }


def _jsonable(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    return value


def _hashable(value: Any) -> Any:
    if isinstance(value, list):
        return tuple(_hashable(v) for v in value)
    if isinstance(value, dict):
        return tuple(sorted((k, _hashable(v)) for k, v in value.items()))
    return value


def system_from_dict(data: Dict[str, Any]) -> IfsSystem:
    try:
        explicit = []
        for entry in data["maps"]:
            a, b, c, d = (float(x) for x in entry["matrix"])
            tx, ty = (float(x) for x in entry.get("translation", (0.0, 0.0)))
            explicit.append((int(entry["index"]), AffineMap(Matrix2(a, b, c, d), (tx, ty))))
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigParse(f"malformed system description: {e}")
    tail = tail_from_dict(data["tail"]) if data.get("tail") else None
    return IfsSystem(
        explicit=tuple(explicit),
        tail=tail,
        positivity_flag=data.get("positivity"),
        declared_separation=data.get("separation", "none"),
        name=data.get("name", "custom"),
        params=tuple(sorted((k, _hashable(v)) for k, v in data.get("params", {}).items())),
    )


def save_system(system: IfsSystem, path: str) -> None:
    try:
        with open(path, "w") as f:
            json.dump(system_to_dict(system), f, indent=2)
    except OSError as e:
        raise FileIO(f"cannot write system description: {e}", {"path": path})


def load_system(path: str) -> IfsSystem:
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as e:
        raise FileIO(f"cannot read system description: {e}", {"path": path})
    except json.JSONDecodeError as e:
        raise ConfigParse(f"system description is not valid JSON: {e}", {"path": path})
    return system_from_dict(data)
