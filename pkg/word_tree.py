"""
Word tree enumeration
Log-space products over all words of a fixed length, per-word spectra cached
per (letter table, depth), and deterministic threaded partition sums with
prefix pruning for depths beyond the cache
"""

import logging
import math
import threading
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from affinity_config import get_numerics_config
from linalg2 import Matrix2

logger = logging.getLogger(__name__)

NEG_INF = -math.inf


@dataclass(frozen=True)
class LetterTable:
    """Distinct linear parts of a finite subset with their multiplicities"""

    matrices: Tuple[Matrix2, ...]
    weights: Tuple[int, ...]
    members: Tuple[Tuple[int, ...], ...] = field(default=(), compare=False)

    @property
    def size(self) -> int:
        return len(self.matrices)

    @property
    def cardinality(self) -> int:
        return sum(self.weights)

    @property
    def positive(self) -> bool:
        return all(m.is_positive() for m in self.matrices)

    @property
    def diagonal(self) -> bool:
        return all(m.is_diagonal() for m in self.matrices)

    def arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        mats = np.array([m.as_array() for m in self.matrices], dtype=float)
        mats, log_scale = _normalize(mats)
        log_det = np.array([math.log(abs(m.det)) for m in self.matrices])
        log_weight = np.log(np.array(self.weights, dtype=float))
        return mats, log_scale, log_det, log_weight


def build_letter_table(matrices: Sequence[Matrix2], indices: Sequence[int] = (),
                       merge: bool = True) -> LetterTable:
    """Group equal matrices into weighted letters, keeping first-appearance order"""
    indices = list(indices) or list(range(1, len(matrices) + 1))
    if not merge:
        return LetterTable(tuple(matrices), tuple(1 for _ in matrices),
                           tuple((i,) for i in indices))
    groups: "OrderedDict[Matrix2, List[int]]" = OrderedDict()
    for i, m in zip(indices, matrices):
        groups.setdefault(m, []).append(i)
    return LetterTable(tuple(groups), tuple(len(v) for v in groups.values()),
                       tuple(tuple(v) for v in groups.values()))


def _normalize(mats: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    scale = np.max(np.abs(mats), axis=(1, 2))
    return mats / scale[:, None, None], np.log(scale)


def _log_alpha1(mats: np.ndarray, log_scale: np.ndarray) -> np.ndarray:
    a, b, c, d = mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 0], mats[:, 1, 1]
    p = a * a + c * c
    q = b * b + d * d
    r = a * b + c * d
    lam = 0.5 * (p + q) + np.hypot(0.5 * (p - q), r)
    return 0.5 * np.log(lam) + log_scale


def _log_entry(mats: np.ndarray, log_scale: np.ndarray) -> np.ndarray:
    return np.log(mats.sum(axis=(1, 2))) + log_scale


def log_svf(log_norm: np.ndarray, log_det: np.ndarray, s: float) -> np.ndarray:
    """Vectorized log of the planar singular value function"""
    if s == 0:
        return np.zeros_like(log_norm)
    if s < 1:
        return s * log_norm
    if s <= 2:
        return (2.0 - s) * log_norm + (s - 1.0) * log_det
    return 0.5 * s * log_det


@dataclass
class WordSpectrum:
    """Per-word log quantities of every word of one length, in lexicographic order"""

    depth: int
    log_alpha1: np.ndarray
    log_det: np.ndarray
    log_weight: np.ndarray
    log_entry: Optional[np.ndarray] = None

    @property
    def words(self) -> int:
        return int(self.log_alpha1.shape[0])

    def log_sum(self, s: float, norm: str = "spectral") -> float:
        base = self.log_alpha1 if norm == "spectral" else self.log_entry
        if base is None:
            return NEG_INF
        return float(logsumexp(self.log_weight + log_svf(base, self.log_det, s)))


@dataclass
class LogPartition:
    """Log partition sums at one (s, depth); pruned mass only ever widens the upper end"""

    s: float
    depth: int
    log_spectral: float
    log_entry: Optional[float]
    words_evaluated: int
    words_pruned: int = 0
    log_pruned_spectral: float = NEG_INF
    log_pruned_entry: float = NEG_INF

    @property
    def log_spectral_upper(self) -> float:
        return float(np.logaddexp(self.log_spectral, self.log_pruned_spectral))

    @property
    def log_entry_upper(self) -> Optional[float]:
        if self.log_entry is None:
            return None
        return float(np.logaddexp(self.log_entry, self.log_pruned_entry))


def tree_reduce(values: List[float]) -> float:
    """Fixed pairwise log-sum tree, independent of how the values were scheduled"""
    if not values:
        return NEG_INF
    while len(values) > 1:
        merged = [float(np.logaddexp(values[i], values[i + 1]))
                  for i in range(0, len(values) - 1, 2)]
        if len(values) % 2:
            merged.append(values[-1])
        values = merged
    return values[0]


class WordTree:
    """Enumerates words over one letter table; spectra are cached by depth"""

    def __init__(self, table: LetterTable):
        numerics = get_numerics_config()
        self.table = table
        self.cache_limit = int(numerics["word_cache_limit"])
        self.block_words = int(numerics["block_words"])
        self.prune_ratio = float(numerics["prune_ratio"])
        self._letters = table.arrays()
        self._spectra: "OrderedDict[int, WordSpectrum]" = OrderedDict()
        self._frontier: Optional[Tuple[int, Tuple[np.ndarray, ...]]] = None
        self._lock = threading.Lock()

    def word_count(self, depth: int) -> int:
        return self.table.size ** depth

    def cacheable(self, depth: int) -> bool:
        return self.word_count(depth) <= self.cache_limit

    # -- level enumeration -------------------------------------------------

    def _root(self) -> Tuple[np.ndarray, ...]:
        return (np.eye(2)[None, :, :], np.zeros(1), np.zeros(1), np.zeros(1))

    def _extend(self, level: Tuple[np.ndarray, ...]) -> Tuple[np.ndarray, ...]:
        mats, log_scale, log_det, log_weight = level
        l_mats, l_scale, l_det, l_weight = self._letters
        prod = np.einsum("wij,kjl->wkil", mats, l_mats).reshape(-1, 2, 2)
        prod, extra = _normalize(prod)
        log_scale = (log_scale[:, None] + l_scale[None, :]).reshape(-1) + extra
        log_det = (log_det[:, None] + l_det[None, :]).reshape(-1)
        log_weight = (log_weight[:, None] + l_weight[None, :]).reshape(-1)
        return prod, log_scale, log_det, log_weight

    def _level(self, depth: int) -> Tuple[np.ndarray, ...]:
        if self._frontier is not None and self._frontier[0] <= depth:
            start, level = self._frontier
        else:
            start, level = 0, self._root()
        for _ in range(start, depth):
            level = self._extend(level)
        self._frontier = (depth, level)
        return level

    def _spectrum_of(self, depth: int, level: Tuple[np.ndarray, ...]) -> WordSpectrum:
        mats, log_scale, log_det, log_weight = level
        return WordSpectrum(
            depth=depth,
            log_alpha1=_log_alpha1(mats, log_scale),
            log_det=log_det,
            log_weight=log_weight,
            log_entry=_log_entry(mats, log_scale) if self.table.positive else None,
        )

    def spectrum(self, depth: int) -> WordSpectrum:
        """Cached per-word spectrum; depth must be cacheable"""
        with self._lock:
            if depth in self._spectra:
                self._spectra.move_to_end(depth)
                return self._spectra[depth]
            if not self.cacheable(depth):
                raise ValueError(f"depth {depth} exceeds the word cache")
            spectrum = self._spectrum_of(depth, self._level(depth))
            self._spectra[depth] = spectrum
            while len(self._spectra) > 4:
                self._spectra.popitem(last=False)
            logger.debug(f"Cached {spectrum.words} words at depth {depth}")
            return spectrum

    # -- partition sums ----------------------------------------------------

    def log_partition(self, s: float, depth: int, threads: int = 1,
                      prune: bool = True) -> LogPartition:
        if self.cacheable(depth):
            spectrum = self.spectrum(depth)
            log_entry = spectrum.log_sum(s, "entry") if self.table.positive else None
            return LogPartition(s, depth, spectrum.log_sum(s, "spectral"), log_entry,
                                spectrum.words)
        return self._blocked_partition(s, depth, threads, prune)

    def _split(self, depth: int) -> Tuple[int, int]:
        k = self.table.size
        suffix = max(1, int(math.log(self.block_words) / math.log(k))) if k > 1 else depth
        suffix = min(suffix, depth)
        return depth - suffix, suffix

    def _blocked_partition(self, s: float, depth: int, threads: int,
                           prune: bool) -> LogPartition:
        prefix_depth, suffix_depth = self._split(depth)
        prefix = self._level_uncached(prefix_depth)
        suffix = self._level_uncached(suffix_depth)
        positive = self.table.positive

        p_mats, p_scale, p_det, p_weight = prefix
        p_alpha = _log_alpha1(p_mats, p_scale)
        letters = self._spectrum_of(1, self._extend(self._root()))
        bounds_spec = p_weight + log_svf(p_alpha, p_det, s) + \
            suffix_depth * letters.log_sum(s, "spectral")
        keep = np.ones(p_mats.shape[0], dtype=bool)
        pruned_spec, pruned_entry = NEG_INF, NEG_INF
        if positive:
            bounds_entry = p_weight + log_svf(_log_entry(p_mats, p_scale), p_det, s) + \
                suffix_depth * letters.log_sum(s, "entry")
        if prune and p_mats.shape[0] > 1:
            keep = bounds_spec >= bounds_spec.max() + math.log(self.prune_ratio)
            if positive:
                keep |= bounds_entry >= bounds_entry.max() + math.log(self.prune_ratio)
            if not keep.all():
                pruned_spec = float(logsumexp(bounds_spec[~keep]))
                if positive:
                    pruned_entry = float(logsumexp(bounds_entry[~keep]))
        kept = np.flatnonzero(keep)

        s_count = suffix[0].shape[0]
        per_chunk = max(1, self.block_words // s_count)
        chunks = [kept[i:i + per_chunk] for i in range(0, kept.shape[0], per_chunk)]

        def reduce_chunk(rows: np.ndarray) -> Tuple[float, float]:
            mats = np.einsum("cij,sjl->csil", p_mats[rows], suffix[0]).reshape(-1, 2, 2)
            mats, extra = _normalize(mats)
            log_scale = (p_scale[rows][:, None] + suffix[1][None, :]).reshape(-1) + extra
            log_det = (p_det[rows][:, None] + suffix[2][None, :]).reshape(-1)
            log_weight = (p_weight[rows][:, None] + suffix[3][None, :]).reshape(-1)
            spec = float(logsumexp(log_weight + log_svf(_log_alpha1(mats, log_scale), log_det, s)))
            entry = NEG_INF
            if positive:
                entry = float(logsumexp(log_weight + log_svf(_log_entry(mats, log_scale), log_det, s)))
            return spec, entry

        if threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(reduce_chunk, chunks))
        else:
            results = [reduce_chunk(rows) for rows in chunks]

        words = int(kept.shape[0]) * s_count
        return LogPartition(
            s=s,
            depth=depth,
            log_spectral=tree_reduce([r[0] for r in results]),
            log_entry=tree_reduce([r[1] for r in results]) if positive else None,
            words_evaluated=words,
            words_pruned=int((~keep).sum()) * s_count,
            log_pruned_spectral=pruned_spec,
            log_pruned_entry=pruned_entry,
        )

    def _level_uncached(self, depth: int) -> Tuple[np.ndarray, ...]:
        level = self._root()
        for _ in range(depth):
            level = self._extend(level)
        return level


_TREES: "OrderedDict[LetterTable, WordTree]" = OrderedDict()
_TREES_LOCK = threading.Lock()
_TREES_MAX = 32


def word_tree(table: LetterTable) -> WordTree:
    """Shared tree per letter table, least recently used trees dropped first"""
    with _TREES_LOCK:
        tree = _TREES.get(table)
        if tree is None:
            tree = WordTree(table)
            _TREES[table] = tree
            while len(_TREES) > _TREES_MAX:
                _TREES.popitem(last=False)
        else:
            _TREES.move_to_end(table)
        return tree


def clear_word_cache() -> None:
    with _TREES_LOCK:
        _TREES.clear()


def release_word_tree(table: LetterTable) -> None:
    """Drop the cached tree of one table once its subset is finished"""
    with _TREES_LOCK:
        _TREES.pop(table, None)
