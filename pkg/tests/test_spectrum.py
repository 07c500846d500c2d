import csv
import json
import math

import pytest

from dimension import DimensionInterval
from errors import AssumptionViolated, FileIO, ParameterOrder
from ifs_model import SubsetSpec
from spectrum import (
    AFFINITY, CLOSED_FORM, PROJECTION, SpectrumCloud, SpectrumPoint, _band_of, _finite_subsets,
    _gaps, _monotone_closure, certify_hole, distinguished_subsets, enumerate_spectrum,
    isolated_point_demo, non_compact_demo, verify_digit_monotonicity, verify_lemma_crucial,
    verify_lemma_sI, write_cloud,
)

S_HEAD = math.log(3.0) / math.log(5.0)
PROJECTION_BOUND = math.log(2.0) / math.log(3.0)


def interval(base, lo, hi, certified=True):
    return DimensionInterval(SubsetSpec(base), lo, hi, certified=certified)


@pytest.fixture
def small_cloud():
    cloud = SpectrumCloud(ground_set=SubsetSpec((1, 2)), n_max=2, mode="exhaustive")
    cloud.points = [
        SpectrumPoint(SubsetSpec((1,)), interval((1,), 0.0, 0.0)),
        SpectrumPoint(SubsetSpec((1, 2)), interval((1, 2), 0.25, 0.2500001)),
    ]
    cloud.gaps = [(0.0, 0.25)]
    return cloud


class TestEnumeration:
    def test_equal_ratio_clusters(self, equal_quarters):
        cloud = enumerate_spectrum(equal_quarters, n_max=4, include_cofinite=False)
        assert len(cloud.points) == 15
        assert not cloud.partial
        for p in cloud.points:
            assert p.source == AFFINITY
            assert p.interval.contains(math.log(len(p.subset.base)) / math.log(4.0))
        assert len(cloud.significant_gaps()) == 3
        assert len(cloud.isolated_candidates) == 2

    def test_head_copies_use_closed_form(self, paper51):
        cloud = enumerate_spectrum(paper51, n_max=3, include_cofinite=False)
        assert len(cloud.points) == 7
        head = cloud.point(SubsetSpec((1, 2, 3)))
        assert head.source == CLOSED_FORM
        assert head.interval.hi == pytest.approx(math.log(3.0) / math.log(paper51.tail.gamma))
        assert head.affinity.contains(S_HEAD)

    def test_isolated_point_routing(self, isolated52):
        cloud = enumerate_spectrum(isolated52, n_max=4, include_cofinite=False)
        pair = cloud.point(SubsetSpec((1, 2)))
        assert pair.source == CLOSED_FORM
        assert (pair.interval.lo, pair.interval.hi) == (0.5, 0.5)
        mixed = cloud.point(SubsetSpec((1, 3)))
        assert mixed.source == PROJECTION
        assert mixed.interval.lo == PROJECTION_BOUND
        vertical = cloud.point(SubsetSpec((3, 4)))
        assert vertical.source == CLOSED_FORM
        assert vertical.interval.hi <= isolated52.parameters["s0"][1]
        assert any(c["interval"] == [0.5, 0.5] and "{1,2}" in c["subsets"]
                   for c in cloud.isolated_candidates)

    def test_sampled_mode_is_deterministic(self):
        first = _finite_subsets([1, 2, 3, 5, 6], "sampled", 50, 7)
        second = _finite_subsets([1, 2, 3, 5, 6], "sampled", 50, 7)
        assert first == second
        for g in (1, 2, 3, 5, 6):
            assert SubsetSpec((g,)) in first

    def test_enumeration_modes(self):
        assert len(_finite_subsets([1, 2, 3], "exhaustive", 0, 0)) == 7
        with pytest.raises(ParameterOrder):
            _finite_subsets([1, 2, 3], "random", 10, 0)
        with pytest.raises(ParameterOrder):
            _finite_subsets(list(range(1, 24)), "exhaustive", 0, 0)

    def test_distinguished_subsets(self, paper51, isolated52, half_quarter):
        found = distinguished_subsets(paper51)
        assert len(found) == 6
        assert SubsetSpec((1, 2), 5) in found and SubsetSpec((), 5) in found
        assert SubsetSpec((1, 2), 3) in distinguished_subsets(isolated52)
        assert distinguished_subsets(half_quarter) == []


class TestCloudHelpers:
    def test_gaps_merge_overlapping_points(self):
        gaps, clusters = _gaps([(0.0, 0.0), (0.1, 0.3), (0.2, 0.4), (1.0, 1.0)])
        assert gaps == [(0.0, 0.1), (0.4, 1.0)]
        assert [c[2] for c in clusters] == [[0], [1, 2], [3]]

    def test_monotone_closure(self):
        small = interval((1,), 0.2, 0.95)
        big = interval((1, 2), 0.1, 0.9)
        loose = interval((1, 2, 3), 0.0, 1.5, certified=False)
        _monotone_closure([(small.subset, small), (big.subset, big), (loose.subset, loose)])
        assert (small.lo, small.hi) == (0.2, 0.9)
        assert (big.lo, big.hi) == (0.2, 0.9)
        assert (loose.lo, loose.hi) == (0.0, 1.5)

    def test_csv_and_json_agree(self, tmp_path, small_cloud):
        write_cloud(small_cloud, str(tmp_path / "cloud.json"), "json")
        write_cloud(small_cloud, str(tmp_path / "cloud.csv"), "csv")
        data = json.loads((tmp_path / "cloud.json").read_text())
        with open(tmp_path / "cloud.csv", newline="") as f:
            rows = list(csv.reader(f, delimiter=";"))
        assert rows[0] == ["subset", "lo", "hi", "certified", "method"]
        assert len(rows) - 1 == len(data["points"])
        for row, point in zip(rows[1:], data["points"]):
            assert row[0] == point["subset"]
            assert float(row[1]) == point["lo"]
            assert float(row[2]) == point["hi"]

    def test_unknown_format(self, tmp_path, small_cloud):
        with pytest.raises(ParameterOrder):
            write_cloud(small_cloud, str(tmp_path / "cloud.xml"), "xml")

    def test_unwritable_path(self, tmp_path, small_cloud):
        with pytest.raises(FileIO):
            write_cloud(small_cloud, str(tmp_path / "absent" / "cloud.json"))


class TestChecks:
    def test_head_growth_fails_at_defaults(self):
        assert not verify_lemma_sI(5.0, 0.4, 0.5)

    def test_head_growth_holds_for_large_beta(self):
        check = verify_lemma_sI(1e6, 0.9, 0.9)
        assert check.passed
        assert check.details["left"] == pytest.approx(6.0)

    def test_head_growth_parameter_range(self):
        with pytest.raises(ParameterOrder):
            verify_lemma_sI(2.0, 0.4, 0.5)

    def test_prime_bound_rejects_broken_assumptions(self):
        with pytest.raises(AssumptionViolated) as info:
            verify_lemma_crucial(5.0, 10.0, 0.6, 0.9, 0.4, 0.5)
        assert "column_ratio" in info.value.failing

    def test_digit_replacement(self, paper51):
        check = verify_digit_monotonicity(paper51, SubsetSpec((1, 2)), 5, 7, depths=(1, 2, 3),
                                          with_dimensions=False)
        assert check.passed
        assert check.details["entry_domination"]

    def test_digit_replacement_order(self, paper51, half_quarter):
        with pytest.raises(ParameterOrder):
            verify_digit_monotonicity(paper51, SubsetSpec((1, 2)), 7, 5, with_dimensions=False)
        with pytest.raises(ParameterOrder):
            verify_digit_monotonicity(half_quarter, SubsetSpec((1,)), 5, 7)

    @pytest.mark.slow
    def test_prime_bound_at_defaults(self, paper51):
        params = {k: float(paper51.parameters[k]) for k in ("beta", "gamma", "b", "d", "c", "eta")}
        check = verify_lemma_crucial(system=paper51, **params)
        assert check.passed
        assert check.details["direct"] < 1.0
        assert check.details["enumerated_upper"] < 1.0


class TestHole:
    def test_needs_conjugated_diagonal_gallery(self, half_quarter):
        with pytest.raises(ParameterOrder):
            certify_hole(half_quarter)
        with pytest.raises(ParameterOrder):
            non_compact_demo(system=half_quarter)

    def test_non_compact_keeps_best_so_far(self, paper51):
        report = non_compact_demo(tolerance=1e-12, budget=1000, system=paper51,
                                  tail=(5, 5), with_hole=False)
        (only,) = report.sequence
        assert not only.converged
        assert only.lo <= only.hi

    @pytest.mark.slow
    def test_hole_is_certified(self, paper51):
        hole = certify_hole(paper51, n_max=6)
        assert hole.certified
        assert hole.violations == []
        assert hole.width > 0.0
        assert hole.interval[1] <= S_HEAD
        assert hole.reference.contains(S_HEAD)
        assert [row["case"] for row in hole.case_table] == [1, 2, 3, 4]
        prime, lone = hole.case_table[0], hole.case_table[1]
        assert lone["below_prime"] == (lone["interval"][1] < prime["interval"][0])

    @pytest.mark.slow
    def test_non_compact_sequence(self, paper51):
        report = non_compact_demo(tolerance=1e-4, budget=100_000, system=paper51,
                                  tail=(5, 6), with_hole=False)
        assert report.target == pytest.approx(S_HEAD)
        assert report.hausdorff_head == pytest.approx(math.log(3.0) / math.log(paper51.tail.gamma))
        assert len(report.sequence) == 2
        assert all(iv.hi > report.target for iv in report.sequence)


class TestIsolatedDemo:
    @pytest.mark.slow
    def test_three_bands(self, isolated52):
        cloud = isolated_point_demo(n_max=6, system=isolated52)
        assert cloud.details["bands_hold"], cloud.details["band_violations"]
        assert cloud.details["bands"]["isolated"] == 1
        assert any(c["interval"] == [0.5, 0.5] for c in cloud.isolated_candidates)

    def test_band_check_uses_affinity_enclosure(self, isolated52):
        start = isolated52.tail.start_index
        s0_hi = isolated52.parameters["s0"][1]
        mixed = SubsetSpec((1, 3))
        projected = interval((1, 3), PROJECTION_BOUND, 0.64)
        honest = SpectrumPoint(mixed, projected, PROJECTION, interval((1, 3), 0.630, 0.632))
        assert _band_of(honest, start, s0_hi) == ("high", True)
        tampered = SpectrumPoint(mixed, projected, PROJECTION, interval((1, 3), 0.45, 0.48))
        assert _band_of(tampered, start, s0_hi) == ("high", False)
        missing = SpectrumPoint(mixed, projected, PROJECTION, None)
        assert _band_of(missing, start, s0_hi) == ("high", False)

    def test_isolated_and_low_bands(self, isolated52):
        start = isolated52.tail.start_index
        s0_hi = isolated52.parameters["s0"][1]
        pair = SpectrumPoint(SubsetSpec((1, 2)), interval((1, 2), 0.5, 0.5), CLOSED_FORM)
        assert _band_of(pair, start, s0_hi) == ("isolated", True)
        low = SpectrumPoint(SubsetSpec((3, 4)), interval((3, 4), 0.1, s0_hi + 0.01), CLOSED_FORM)
        assert _band_of(low, start, s0_hi) == ("low", False)
