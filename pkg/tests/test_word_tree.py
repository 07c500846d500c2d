import itertools
import math

import numpy as np
import pytest

from linalg2 import Matrix2, entry_svf, product, svf
from word_tree import (
    WordTree, build_letter_table, clear_word_cache, release_word_tree, tree_reduce, word_tree,
)

LETTERS = [Matrix2(0.4, 0.1, -0.2, 0.3), Matrix2(0.3, -0.1, 0.1, 0.5)]
POSITIVE = [Matrix2(0.3, 0.1, 0.1, 0.2), Matrix2(0.2, 0.05, 0.1, 0.3)]


def brute_force(mats, s, depth):
    return sum(svf(product(word), s) for word in itertools.product(mats, repeat=depth))


class TestLetterTable:
    def test_equal_matrices_merge(self):
        m = Matrix2(0.3, 0.1, 0.1, 0.2)
        table = build_letter_table([m, m, Matrix2.diag(0.5, 0.2), m], [1, 2, 5, 7])
        assert table.size == 2
        assert table.cardinality == 4
        assert table.weights == (3, 1)
        assert table.members == ((1, 2, 7), (5,))

    def test_unmerged_keeps_order(self):
        m = Matrix2(0.3, 0.1, 0.1, 0.2)
        table = build_letter_table([m, m], [4, 9], merge=False)
        assert table.size == 2
        assert table.members == ((4,), (9,))

    def test_flags(self):
        assert build_letter_table(POSITIVE).positive
        assert build_letter_table([Matrix2.diag(0.5, 0.2)]).diagonal


class TestTreeReduce:
    def test_sum_in_log_space(self):
        values = [math.log(v) for v in (1.0, 2.0, 3.0, 4.0, 5.0)]
        assert math.exp(tree_reduce(values)) == pytest.approx(15.0, rel=1e-14)

    def test_empty(self):
        assert tree_reduce([]) == -math.inf


class TestLogPartition:
    @pytest.mark.parametrize("s", [0.3, 1.0, 1.6, 2.4])
    def test_cached_level_matches_brute_force(self, s):
        tree = WordTree(build_letter_table(LETTERS))
        part = tree.log_partition(s, 4)
        assert part.words_evaluated == 16
        assert math.exp(part.log_spectral) == pytest.approx(brute_force(LETTERS, s, 4), rel=1e-10)
        assert part.log_entry is None

    def test_reversed_depth_first_walk_agrees(self):
        rng = np.random.default_rng(11)
        family = [Matrix2.from_array(rng.uniform(0.02, 0.3, size=4)) for _ in range(3)]
        s = 0.7
        part = WordTree(build_letter_table(family, merge=False)).log_partition(s, 6, prune=False)

        def walk(prefix, depth):
            if depth == 0:
                return svf(prefix, s), entry_svf(prefix, s)
            spectral = entry = 0.0
            for m in reversed(family):
                a, b = walk(m if prefix is None else prefix @ m, depth - 1)
                spectral += a
                entry += b
            return spectral, entry

        spectral, entry = walk(None, 6)
        assert part.words_evaluated == 3 ** 6
        assert math.exp(part.log_spectral) == pytest.approx(spectral, rel=1e-10)
        assert math.exp(part.log_entry) == pytest.approx(entry, rel=1e-10)

    def test_blocked_enumeration_matches_cached(self):
        cached = WordTree(build_letter_table(LETTERS)).log_partition(0.7, 7)
        tree = WordTree(build_letter_table(LETTERS))
        tree.cache_limit = 0
        tree.block_words = 4
        blocked = tree.log_partition(0.7, 7, prune=False)
        assert blocked.words_evaluated == 2 ** 7
        assert blocked.log_spectral == pytest.approx(cached.log_spectral, rel=1e-12)

    def test_blocked_sum_is_thread_independent(self):
        results = []
        for threads in (1, 4, 16):
            tree = WordTree(build_letter_table(POSITIVE))
            tree.cache_limit = 0
            tree.block_words = 4
            part = tree.log_partition(1.3, 8, threads=threads, prune=False)
            results.append((part.log_spectral, part.log_entry))
        assert results[0] == results[1] == results[2]

    def test_entry_sum_dominates_spectral(self):
        part = WordTree(build_letter_table(POSITIVE)).log_partition(0.8, 5)
        assert part.log_entry >= part.log_spectral

    def test_pruned_mass_widens_upper_end(self):
        tree = WordTree(build_letter_table([Matrix2(0.5, 0.1, 0.1, 0.4),
                                            Matrix2(1e-9, 1e-10, 1e-10, 1e-9)]))
        tree.cache_limit = 0
        tree.block_words = 4
        part = tree.log_partition(0.9, 8, prune=True)
        assert part.words_pruned > 0
        assert part.log_spectral_upper >= part.log_spectral
        exact = tree.log_partition(0.9, 8, prune=False)
        assert part.log_spectral <= exact.log_spectral + 1e-12
        assert exact.log_spectral <= part.log_spectral_upper + 1e-12

    def test_deep_products_do_not_underflow(self):
        tiny = [Matrix2(1e-20, 2e-21, 1e-21, 3e-20), Matrix2(2e-20, 1e-21, 3e-21, 1e-20)]
        part = WordTree(build_letter_table(tiny)).log_partition(1.0, 12)
        assert math.isfinite(part.log_spectral)
        assert part.log_spectral < -500.0


class TestTreeCache:
    def test_shared_and_released(self):
        clear_word_cache()
        table = build_letter_table(POSITIVE)
        assert word_tree(table) is word_tree(table)
        first = word_tree(table)
        release_word_tree(table)
        assert word_tree(table) is not first
