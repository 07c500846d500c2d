import sys

import langfuse_utils
import run_affinity
import setup_env
from affinity_config import (
    AFFINITY_CONFIG, get_gallery_config, get_output_config, load_affinity_config_from_env,
)
from config import Settings


class FakeTrace:
    id = "trace-1"

    def __init__(self, calls):
        self.calls = calls

    def span(self, **kwargs):
        self.calls.append(("span", kwargs))

    def end(self):
        self.calls.append(("end", {}))


class FakeClient:
    def __init__(self, fail=False):
        self.calls = []
        self.fail = fail

    def trace(self, **kwargs):
        if self.fail:
            raise RuntimeError("ingestion unavailable")
        self.calls.append(("trace", kwargs))
        return FakeTrace(self.calls)


class TestSettings:
    def test_environment_overrides(self, monkeypatch):
        monkeypatch.setenv("AFFINITY_THREADS", "0")
        monkeypatch.setenv("AFFINITY_BUDGET", "5000")
        monkeypatch.setenv("AFFINITY_TOLERANCE", "1e-5")
        s = Settings()
        assert s.threads == 1
        assert s.default_budget == 5000
        assert s.default_tolerance == 1e-5

    def test_config_overrides_leave_base_untouched(self, monkeypatch):
        monkeypatch.setenv("AFFINITY_CSV_DELIMITER", ",")
        monkeypatch.setenv("AFFINITY_SPECTRUM_DEPTH", "4")
        monkeypatch.setenv("AFFINITY_DELTA_MARGIN", "3")
        config = load_affinity_config_from_env()
        assert config["output"]["csv_delimiter"] == ","
        assert config["numerics"]["spectrum_max_depth"] == 4
        assert config["numerics"]["delta_margin"] == 3
        assert AFFINITY_CONFIG["numerics"]["delta_margin"] == 7
        assert AFFINITY_CONFIG["output"]["csv_delimiter"] == ";"

    def test_gallery_defaults_are_copies(self):
        params = get_gallery_config("paper51")
        params["beta"] = 11.0
        assert get_gallery_config("paper51")["beta"] == 5.0
        assert get_gallery_config("unknown") == {}

    def test_output_defaults(self):
        output = get_output_config()
        assert output["significant_digits"] == 17
        assert set(output["formats"]) == {"csv", "json"}


class TestSetupEnv:
    def test_writes_env_file(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        answers = iter(["", "DEBUG", "4", "", "", "", "", ""])
        monkeypatch.setattr("builtins.input", lambda prompt="": next(answers))
        setup_env.create_env_file()
        text = (tmp_path / ".env").read_text()
        assert "APP_NAME=Affinity_Spectrum" in text
        assert "LOG_LEVEL=DEBUG" in text
        assert "AFFINITY_THREADS=4" in text
        assert "AFFINITY_BUDGET=10000000" in text
        assert "LF_HOST=https://api.langfuse.com" in text

    def test_keeps_existing_file(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        (tmp_path / ".env").write_text("APP_NAME=mine\n")
        monkeypatch.setattr("builtins.input", lambda prompt="": "n")
        setup_env.create_env_file()
        assert (tmp_path / ".env").read_text() == "APP_NAME=mine\n"


class TestLangfuse:
    def test_no_client_is_a_no_op(self, monkeypatch):
        monkeypatch.setattr(langfuse_utils, "lf_client", None)
        assert langfuse_utils.send_trace_minimal("run", {}, {}) is None
        assert langfuse_utils.log_run_metrics("dim", "passed", True, 0.1) is None
        assert langfuse_utils.log_error("FileIO", "missing") is None

    def test_trace_with_single_span(self, monkeypatch):
        client = FakeClient()
        monkeypatch.setattr(langfuse_utils, "lf_client", client)
        assert langfuse_utils.send_trace_minimal("affinity_dim", {"subset": "{1,2}"},
                                                 {"passed": True}) == "trace-1"
        kinds = [kind for kind, _ in client.calls]
        assert kinds == ["trace", "span", "end"]
        assert client.calls[1][1]["name"] == "affinity_run"

    def test_metrics_and_errors(self, monkeypatch):
        client = FakeClient()
        monkeypatch.setattr(langfuse_utils, "lf_client", client)
        assert langfuse_utils.log_run_metrics("dim", "passed", True, 0.5, width=1e-4) == "trace-1"
        assert client.calls[1][1]["output"]["width"] == 1e-4
        assert langfuse_utils.log_error("BudgetExceeded", "too many words",
                                        {"budget": 1000}) == "trace-1"

    def test_client_errors_are_swallowed(self, monkeypatch):
        monkeypatch.setattr(langfuse_utils, "lf_client", FakeClient(fail=True))
        assert langfuse_utils.send_trace_minimal("run", {}, {}) is None
        assert langfuse_utils.log_error("FileIO", "missing") is None


class TestLauncher:
    def test_usage_without_arguments(self, monkeypatch, capsys):
        monkeypatch.setattr(sys, "argv", ["run_affinity.py"])
        assert run_affinity.main() == 0
        out = capsys.readouterr().out
        assert "✓ numpy available" in out
        assert "Usage:" in out

    def test_delegates_to_cli(self, monkeypatch):
        monkeypatch.setattr(sys, "argv",
                            ["run_affinity.py", "dim", "--gallery", "selfsimilar", "--subset", "1"])
        assert run_affinity.main() == 0

    def test_cli_failure_exit_code(self, monkeypatch):
        monkeypatch.setattr(sys, "argv",
                            ["run_affinity.py", "dim", "--gallery", "selfsimilar", "--subset", "9"])
        assert run_affinity.main() == 1
