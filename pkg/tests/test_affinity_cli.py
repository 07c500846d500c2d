import json
import math

import pytest

from affinity_cli import (
    RunConfig, build_arg_parser, config_from_args, main, parse_params, parse_subset, run,
)
from errors import ConfigParse, IndexNotInSystem, SubsetSyntaxError
from ifs_model import SubsetSpec, build_gallery, load_system
from pressure import TRUNCATED

S_HEAD = math.log(3.0) / math.log(5.0)


class TestSubsetExpressions:
    @pytest.mark.parametrize("expr,expected", [
        ("1,2,5..7", SubsetSpec((1, 2, 5, 6, 7))),
        ("1,2+tail(5)", SubsetSpec((1, 2), 5)),
        ("tail(5)", SubsetSpec((), 5)),
        (" 3 + tail ( 6 ) ", SubsetSpec((3,), 6)),
        ("2,1,2", SubsetSpec((1, 2))),
    ])
    def test_examples(self, expr, expected):
        assert parse_subset(expr) == expected

    def test_index_checked_against_system(self, paper51):
        with pytest.raises(IndexNotInSystem):
            parse_subset("4", paper51)

    @pytest.mark.parametrize("expr,position", [
        ("1,,2", 2),
        ("tail(5", 6),
        ("1..x", 3),
        ("", 0),
    ])
    def test_syntax_error_position(self, expr, position):
        with pytest.raises(SubsetSyntaxError) as info:
            parse_subset(expr)
        assert info.value.position == position

    def test_descending_range(self):
        with pytest.raises(SubsetSyntaxError):
            parse_subset("5..3")


class TestParams:
    def test_values(self):
        params = parse_params("ratios=0.5:0.25, anisotropy=none,beta=7")
        assert params == {"ratios": [0.5, 0.25], "anisotropy": None, "beta": 7.0}

    def test_empty(self):
        assert parse_params(None) == {}

    @pytest.mark.parametrize("text", ["beta", "beta=seven"])
    def test_malformed(self, text):
        with pytest.raises(ConfigParse):
            parse_params(text)


class TestRunConfig:
    @pytest.mark.parametrize("changes", [
        {"command": "plot"},
        {"command": "demo", "demo": None},
        {"budget": 10},
        {"tolerance": 0.7},
        {"tolerance": 0.0},
        {"fmt": "xml"},
        {"threads": 0},
    ])
    def test_validation(self, changes):
        config = RunConfig(**dict({"command": "dim"}, **changes))
        with pytest.raises(ConfigParse):
            config.validate()

    def test_demo_picks_its_gallery(self):
        parser = build_arg_parser()
        assert config_from_args(parser.parse_args(["demo", "isolated"])).gallery == "isolated52"
        assert config_from_args(parser.parse_args(["dim"])).gallery == "paper51"
        args = parser.parse_args(["dim", "--system", "system.json"])
        assert config_from_args(args).gallery is None


class TestRun:
    def test_dim_on_self_similar_pair(self, capsys):
        code, result = run(RunConfig("dim", gallery="selfsimilar", subset="1,2"))
        assert code == 0
        assert result["status"] == "passed"
        expected = math.log((1 + math.sqrt(5)) / 2) / math.log(2)
        assert result["result"]["lo"] <= expected <= result["result"]["hi"]
        assert "✓" in capsys.readouterr().out

    def test_pressure_of_head_pair(self):
        code, result = run(RunConfig("pressure", subset="1,2", s=S_HEAD))
        assert code == 0
        bound = result["result"]
        assert bound["lower"] <= 2.0 / 3.0 * (1 + 1e-9)
        assert bound["upper"] >= 2.0 / 3.0 * (1 - 1e-9)

    def test_pressure_of_cofinite_subset(self):
        code, result = run(RunConfig("pressure", subset="1,2+tail(5)", s=S_HEAD, N=8,
                                     budget=1000))
        assert code == 0
        bound = result["result"]
        assert bound["method"] == TRUNCATED
        assert 2.0 / 3.0 * (1 - 1e-9) <= bound["lower"] <= bound["upper"]

    def test_absent_index_exits_one(self, capsys):
        code, result = run(RunConfig("pressure", subset="4", s=0.5))
        assert code == 1
        assert result["status"] == "error"
        assert result["error"]["error_type"] == "IndexNotInSystem"
        assert "IndexNotInSystem" in capsys.readouterr().err

    def test_missing_exponent(self):
        code, result = run(RunConfig("pressure", subset="1,2"))
        assert code == 1
        assert result["error"]["error_type"] == "ConfigParse"

    def test_emitted_system_round_trips(self, tmp_path):
        path = tmp_path / "system.json"
        code, _ = run(RunConfig("dim", gallery="selfsimilar", subset="1", emit_system=str(path)))
        assert code == 0
        assert load_system(str(path)) == build_gallery("selfsimilar")
        code, result = run(RunConfig("dim", gallery=None, system_path=str(path), subset="1,2"))
        assert code == 0

    def test_main_writes_json(self, tmp_path):
        out = tmp_path / "dim.json"
        code = main(["dim", "--gallery", "selfsimilar", "--subset", "1,2", "--out", str(out)])
        assert code == 0
        data = json.loads(out.read_text())
        assert data["status"] == "passed"
        assert data["result"]["certified"]

    def test_main_rejects_bad_params(self):
        assert main(["dim", "--gallery", "selfsimilar", "--params", "ratios=x"]) == 2
