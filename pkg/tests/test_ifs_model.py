import math

import pytest

from errors import (
    ConfigParse, EmptySubset, FileIO, IndexNotInSystem, NotContracting, ParameterOrder,
    TailUnavailable,
)
from ifs_model import (
    AffineMap, HarmonicPowerTail, IfsSystem, PaperFamily51Tail, SubsetSpec, build_gallery,
    build_paper_family_51, check_irreducibility, load_system, paper51_conditions,
    paper51_head_matrix, save_system, system_from_dict, system_to_dict, validate_subset,
    verify_sosc_rectangles,
)
from linalg2 import Matrix2

BETA = 5.0


class TestSubsetSpec:
    def test_canonical_order(self):
        assert SubsetSpec((3, 1, 2, 1)).base == (1, 2, 3)

    def test_empty_subset_rejected(self):
        with pytest.raises(EmptySubset):
            SubsetSpec(())

    def test_labels(self):
        assert SubsetSpec((1, 2), 5).label() == "{1,2}+tail(5)"
        assert SubsetSpec((), 5).label() == "tail(5)"
        assert SubsetSpec((2, 7)).label() == "{2,7}"

    def test_containment(self):
        prime = SubsetSpec((1, 2), 5)
        assert prime.contains(1) and prime.contains(99)
        assert not prime.contains(3)
        assert SubsetSpec((1, 2, 5, 6)).issubset(prime)
        assert prime.issubset(SubsetSpec((1, 2, 3), 5))
        assert SubsetSpec((), 6).issubset(SubsetSpec((), 5))
        assert not SubsetSpec((), 5).issubset(SubsetSpec((), 6))
        assert SubsetSpec((), 5).issubset(SubsetSpec((5,), 6))
        assert not prime.issubset(SubsetSpec((1, 2, 5, 6)))

    def test_union_and_disjoint(self):
        union = SubsetSpec((1,)).union(SubsetSpec((3,), 7))
        assert union == SubsetSpec((1, 3), 7)
        assert SubsetSpec((1,)).disjoint(SubsetSpec((2,), 5))
        assert not SubsetSpec((), 5).disjoint(SubsetSpec((), 9))

    def test_truncate(self, paper51):
        assert SubsetSpec((1, 2), 5).truncate(paper51, 7) == SubsetSpec((1, 2, 5, 6, 7))


class TestPaperFamily51:
    def test_index_four_is_absent(self, paper51):
        assert not paper51.has_index(4)
        with pytest.raises(IndexNotInSystem):
            validate_subset(paper51, SubsetSpec((4,)))

    def test_head_matrix_is_conjugated_diagonal(self, paper51):
        gamma = paper51.tail.gamma
        conj = Matrix2(1.0, -1.0, 0.5, 0.5)
        conj_inv = Matrix2(0.5, 1.0, -0.5, 1.0)
        expected = conj @ Matrix2.diag(1.0 / BETA, 1.0 / gamma) @ conj_inv
        head = paper51_head_matrix(BETA, gamma)
        for x, y in zip(head.entries(), expected.entries()):
            assert x == pytest.approx(y, abs=1e-15)
        assert paper51.matrix(1) == paper51.matrix(2) == paper51.matrix(3) == head

    def test_default_parameters_pass_every_condition(self, paper51):
        params = paper51.parameters
        conditions = paper51_conditions(BETA, params["gamma"], params["b"], params["d"],
                                        params["c"], params["eta"])
        assert all(conditions.values())
        assert paper51.positivity_flag

    def test_small_gamma_breaks_column_ratio(self):
        conditions = paper51_conditions(BETA, 10.0, 0.6, 0.9, 0.4, 0.5)
        assert not conditions["column_ratio"]

    def test_parameter_order(self):
        with pytest.raises(ParameterOrder):
            build_paper_family_51(beta=2.0)
        with pytest.raises(ParameterOrder):
            build_paper_family_51(b=0.9, d=0.6)
        with pytest.raises(ParameterOrder):
            build_paper_family_51(gamma=4.0)

    @pytest.mark.parametrize("subset", [
        SubsetSpec((1, 2, 3)),
        SubsetSpec((1, 2, 3), 5),
        SubsetSpec((1, 2), 5),
        SubsetSpec((3, 60)),
    ])
    def test_rectangles_are_separated(self, paper51, subset):
        assert verify_sosc_rectangles(paper51, subset)

    def test_head_boxes_are_stacked(self, paper51):
        boxes = [paper51.affine_map(i).image_box() for i in (1, 2, 3)]
        for lower, upper in zip(boxes, boxes[1:]):
            assert lower[3] < upper[2]
        assert all(box[1] < paper51.tail.x_position for box in boxes)

    def test_remainder_box_covers_tail_images(self, paper51):
        tail = paper51.tail
        x0, x1, y0, y1 = tail.remainder_box(6)
        for n in range(6, 30):
            box = tail.affine_map(n).image_box()
            assert x0 <= box[0] and box[1] <= x1 + 1e-15
            assert y0 <= box[2] and box[3] <= y1 + 1e-15

    def test_coincident_heads_are_rejected(self, paper51):
        head = paper51.affine_map(1)
        system = IfsSystem(explicit=((1, head), (2, head)), name="coincident")
        assert not verify_sosc_rectangles(system, SubsetSpec((1, 2)))

    def test_tail_sum_dominates_partial_sums(self):
        tail = PaperFamily51Tail(beta=BETA, gamma=1000.0, b=0.6, d=0.9)
        for N in (5, 8):
            for s in (0.3, 0.6826, 1.2, 1.8, 2.5):
                direct = sum(tail.term(n, s) for n in range(N + 1, N + 201))
                assert direct <= tail.tail_sum(N, s)

    def test_irreducibility_verdicts(self, paper51):
        assert check_irreducibility(paper51, SubsetSpec((1, 2, 3))).verdict == "reducible"
        for subset in (SubsetSpec((1, 5)), SubsetSpec((1, 2), 5), SubsetSpec((), 5)):
            assert check_irreducibility(paper51, subset).verdict == "strongly-irreducible"


class TestIsolatedPointFamily:
    def test_similarity_root_below_head_value(self, isolated52):
        s0_lo, s0_hi = isolated52.parameters["s0"]
        # sum_{k >= 2} 4^{-ks} = 1  <=>  q^2 + q - 1 = 0 with q = 4^{-s}
        expected = math.log(2.0 / (math.sqrt(5.0) - 1.0)) / math.log(4.0)
        assert s0_lo <= expected <= s0_hi
        assert s0_hi < 0.5

    def test_rectangles_are_separated(self, isolated52):
        assert verify_sosc_rectangles(isolated52, SubsetSpec((1, 2), 3))
        assert verify_sosc_rectangles(isolated52, SubsetSpec((1, 40)))

    def test_diagonal(self, isolated52):
        assert isolated52.is_diagonal([1, 2, 3, 4, 9])


class TestSystems:
    def test_cofinite_subset_needs_tail(self, half_quarter):
        with pytest.raises(TailUnavailable):
            validate_subset(half_quarter, SubsetSpec((1,), 3))

    def test_non_contracting_map(self):
        with pytest.raises(NotContracting):
            IfsSystem(explicit=((1, AffineMap(Matrix2.diag(1.2, 0.5))),))

    def test_explicit_indices_must_increase(self):
        m = AffineMap(Matrix2.diag(0.5, 0.5))
        with pytest.raises(ParameterOrder):
            IfsSystem(explicit=((2, m), (1, m)))

    def test_harmonic_tail(self):
        tail = HarmonicPowerTail(start_index=2)
        assert math.isinf(tail.tail_sum(3, 0.5))
        assert math.isfinite(tail.tail_sum(3, 0.51))

    def test_unknown_gallery(self):
        with pytest.raises(ConfigParse):
            build_gallery("mandelbrot")
        with pytest.raises(ConfigParse):
            build_gallery("selfsimilar", {"unknown": 1.0})


class TestSystemFiles:
    @pytest.mark.parametrize("name", ["paper51", "isolated52", "selfsimilar"])
    def test_description_round_trip(self, tmp_path, name):
        system = build_gallery(name)
        path = tmp_path / f"{name}.json"
        save_system(system, str(path))
        assert load_system(str(path)) == system
        assert system_from_dict(system_to_dict(system)) == system

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileIO):
            load_system(str(tmp_path / "absent.json"))

    def test_malformed_description(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigParse):
            load_system(str(path))
        with pytest.raises(ConfigParse):
            system_from_dict({"maps": [{"index": 1}]})
