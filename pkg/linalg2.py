"""
Planar matrix toolkit
Closed-form 2x2 singular values, the singular value function, the entry-sum
norm and the projective contraction constant of positive families
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from affinity_config import get_numerics_config
from errors import EmptyFamily, NegativeExponent, NonPositiveEntry, SingularMatrix

SLACK = get_numerics_config()["slack"]


def inflate(value: float, stages: int = 1) -> float:
    """Widen an upper bound by the rounding slack of `stages` arithmetic stages"""
    return value * (1.0 + stages * SLACK)


def deflate(value: float, stages: int = 1) -> float:
    """Narrow a lower bound by the rounding slack of `stages` arithmetic stages"""
    return value * (1.0 - stages * SLACK)


def _largest_singular(a: float, b: float, c: float, d: float) -> float:
    # entries pre-scaled so the largest magnitude is 1
    p = a * a + c * c
    q = b * b + d * d
    r = a * b + c * d
    half = 0.5 * (p - q)
    return math.sqrt(0.5 * (p + q) + math.hypot(half, r))


@dataclass(frozen=True)
class Matrix2:
    """Invertible 2x2 real matrix [[a, b], [c, d]] with cached singular values"""

    a: float
    b: float
    c: float
    d: float
    alpha1: float = field(init=False, repr=False, compare=False)
    alpha2: float = field(init=False, repr=False, compare=False)
    det: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        scale = max(abs(self.a), abs(self.b), abs(self.c), abs(self.d))
        if scale == 0.0 or not math.isfinite(scale):
            raise SingularMatrix("matrix has no finite nonzero entry",
                                 {"entries": self.entries()})
        a, b, c, d = self.a / scale, self.b / scale, self.c / scale, self.d / scale
        det = (a * d - b * c) * scale * scale
        if det == 0.0:
            raise SingularMatrix("determinant is zero or underflows",
                                 {"entries": self.entries()})
        alpha1 = _largest_singular(a, b, c, d) * scale
        object.__setattr__(self, "det", det)
        object.__setattr__(self, "alpha1", alpha1)
        object.__setattr__(self, "alpha2", abs(det) / alpha1)

    @classmethod
    def from_array(cls, array: Sequence) -> "Matrix2":
        arr = np.asarray(array, dtype=float).reshape(2, 2)
        return cls(float(arr[0, 0]), float(arr[0, 1]), float(arr[1, 0]), float(arr[1, 1]))

    @classmethod
    def diag(cls, x: float, y: float) -> "Matrix2":
        return cls(x, 0.0, 0.0, y)

    @classmethod
    def rotation(cls, theta: float) -> "Matrix2":
        ct, st = math.cos(theta), math.sin(theta)
        return cls(ct, -st, st, ct)

    def entries(self) -> Tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=float)

    def __matmul__(self, other: "Matrix2") -> "Matrix2":
        return Matrix2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def power(self, n: int) -> "Matrix2":
        result = Matrix2(1.0, 0.0, 0.0, 1.0)
        for _ in range(n):
            result = result @ self
        return result

    def apply(self, v: Sequence[float]) -> Tuple[float, float]:
        return (self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1])

    @property
    def trace(self) -> float:
        return self.a + self.d

    def is_positive(self) -> bool:
        return min(self.entries()) > 0.0

    def is_diagonal(self) -> bool:
        return self.b == 0.0 and self.c == 0.0

    def is_scalar(self) -> bool:
        return self.is_diagonal() and self.a == self.d

    def dominates(self, other: "Matrix2") -> bool:
        """Entrywise self >= other"""
        return all(x >= y for x, y in zip(self.entries(), other.entries()))


def product(matrices: Iterable[Matrix2]) -> Matrix2:
    result = Matrix2(1.0, 0.0, 0.0, 1.0)
    for m in matrices:
        result = result @ m
    return result


def singular_values(m: Matrix2) -> Tuple[float, float]:
    """(alpha1, alpha2) with alpha2 taken from the determinant, never by subtraction"""
    return m.alpha1, m.alpha2


def svf_from_parts(alpha1: float, abs_det: float, s: float) -> float:
    """Planar singular value function from the top singular value and |det|"""
    if s < 0:
        raise NegativeExponent("singular value function needs s >= 0", {"s": s})
    if s == 0:
        return 1.0
    if s < 1:
        return alpha1 ** s
    if s <= 2:
        return alpha1 ** (2.0 - s) * abs_det ** (s - 1.0)
    return abs_det ** (s / 2.0)


def svf(m: Matrix2, s: float) -> float:
    return svf_from_parts(m.alpha1, abs(m.det), s)


def svf_exponent(s: float) -> float:
    """Exponent carried by the norm in the planar branches below 2"""
    return s if s <= 1.0 else 2.0 - s


def entry_sum_norm(m: Matrix2) -> float:
    """1^T A 1 for a strictly positive matrix"""
    if not m.is_positive():
        raise NonPositiveEntry("entry-sum norm needs strictly positive entries",
                               {"entries": m.entries()})
    return m.a + m.b + m.c + m.d


def entry_svf(m: Matrix2, s: float) -> float:
    """Singular value function with the entry-sum norm in place of the spectral norm"""
    return svf_from_parts(entry_sum_norm(m), abs(m.det), s) if s <= 2 else svf(m, s)


def kappa(family: Iterable[Matrix2]) -> float:
    """Minimum column entry ratio over a positive family"""
    family = list(family)
    if not family:
        raise EmptyFamily("kappa of an empty family")
    value = 1.0
    for m in family:
        if not m.is_positive():
            raise NonPositiveEntry("kappa needs strictly positive matrices",
                                   {"entries": m.entries()})
        value = min(value, m.a / m.c, m.c / m.a, m.b / m.d, m.d / m.b)
    return value


def real_eigenvalues(m: Matrix2) -> List[float]:
    """Real eigenvalues in decreasing order of magnitude (empty if complex)"""
    tr, det = m.trace, m.det
    disc = tr * tr - 4.0 * det
    if disc < 0:
        return []
    root = math.sqrt(disc)
    big = 0.5 * (tr + math.copysign(root, tr)) if tr != 0 else 0.5 * root
    if big == 0.0:
        return [math.sqrt(-det), -math.sqrt(-det)]
    small = det / big
    return sorted([big, small], key=abs, reverse=True)


def spectral_radius(m: Matrix2) -> float:
    eigs = real_eigenvalues(m)
    if eigs:
        return abs(eigs[0])
    # complex conjugate pair
    return math.sqrt(m.det)


def eigenvectors(m: Matrix2) -> Optional[List[Tuple[float, float]]]:
    """Unit real eigenvectors; None when every vector is an eigenvector"""
    if m.is_scalar():
        return None
    vectors: List[Tuple[float, float]] = []
    for lam in real_eigenvalues(m):
        if m.b != 0.0 or m.c != 0.0:
            first = (m.b, lam - m.a)
            second = (lam - m.d, m.c)
            v = first if math.hypot(*first) >= math.hypot(*second) else second
        else:
            v = (1.0, 0.0) if abs(lam - m.a) <= abs(lam - m.d) else (0.0, 1.0)
        norm = math.hypot(*v)
        v = (v[0] / norm, v[1] / norm)
        if v[0] < 0 or (v[0] == 0 and v[1] < 0):
            v = (-v[0], -v[1])
        if not any(is_parallel(v, w) for w in vectors):
            vectors.append(v)
    return vectors


def certified_root(f: Callable[[float], float], a: float, b: float,
                   xtol: float = 1e-14) -> Tuple[float, float]:
    """Bracket [lo, hi] around the root of a decreasing scalar function

    The brentq estimate is widened until f(lo) > 0 > f(hi) is confirmed.
    """
    fa, fb = f(a), f(b)
    if fa <= 0 or fb >= 0:
        raise ValueError(f"root not bracketed on [{a}, {b}]: f(a)={fa}, f(b)={fb}")
    root = brentq(f, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps)
    delta = max(xtol, 8 * np.finfo(float).eps * abs(root))
    for _ in range(80):
        lo, hi = max(a, root - delta), min(b, root + delta)
        if f(lo) > 0 and f(hi) < 0:
            return lo, hi
        delta *= 2.0
    return a, b


def is_parallel(u: Sequence[float], v: Sequence[float], rel: float = 1e-9) -> bool:
    cross = u[0] * v[1] - u[1] * v[0]
    return abs(cross) <= rel * math.hypot(*u) * math.hypot(*v)


def is_eigenvector(m: Matrix2, v: Sequence[float], rel: float = 1e-9) -> bool:
    return is_parallel(m.apply(v), v, rel)
