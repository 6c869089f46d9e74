"""CLI scenario runner and flat key=value configuration."""


import pytest

from asap_stream.cli import main
from asap_stream.config import (DEFAULTS, SCENARIOS, build_pipeline_config,
                                merge, parse_config_file, parse_overrides)
from asap_stream.errors import ConfigurationError


class TestConfigLayers:
    def test_defaults_cover_every_documented_key(self):
        for key in ("gamma.a", "gamma.beta", "gamma.min", "gamma.rate_window_us",
                    "seed", "packager.n_min", "packager.n_max",
                    "packager.timeout_us", "packager.kappa",
                    "packager.model_smoothing", "consumer.kind",
                    "consumer.o_us", "consumer.c_ns", "consumer.jitter",
                    "consumer.radius_px", "consumer.ttl_us"):
            assert key in DEFAULTS

    def test_parse_overrides(self):
        out = parse_overrides(["gamma.a=2e6", "packager.n_min=5"])
        assert out == {"gamma.a": 2e6, "packager.n_min": 5}

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigurationError, match="no.such.key"):
            parse_overrides(["no.such.key=1"])

    def test_config_file_parsing(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("# comment\ngamma.a = 1e6\nseed = 5  # inline\n\n")
        assert parse_config_file(path) == {"gamma.a": 1e6, "seed": 5}

    def test_config_file_error_names_line_and_key(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("gamma.a = 1e6\nbogus.key = 3\n")
        with pytest.raises(ConfigurationError, match=":2.*bogus.key"):
            parse_config_file(path)

    def test_precedence_flag_over_file_over_default(self, tmp_path):
        file_layer = {"seed": 11, "gamma.a": 2e6}
        flag_layer = {"seed": 99}
        cfg = merge(file_layer, flag_layer)
        assert cfg["seed"] == 99            # flag wins
        assert cfg["gamma.a"] == 2e6        # file wins over default
        assert cfg["gamma.beta"] == DEFAULTS["gamma.beta"]

    def test_build_pipeline_config_validates(self):
        cfg = merge({"consumer.c_ns": -5.0})
        with pytest.raises(ConfigurationError) as err:
            build_pipeline_config(cfg)
        assert err.value.key == "consumer.c_ns"


class TestCliRun:
    def test_run_twice_identical_output(self, tmp_path):
        out1, out2 = tmp_path / "m1.csv", tmp_path / "m2.csv"
        base = ["run", "--scenario", "constant", "--seed", "7",
                "--set", "source.duration_s=0.2"]
        assert main(base + ["--out", str(out1)]) == 0
        assert main(base + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_invalid_value_exit_2_names_key(self, tmp_path, capsys):
        code = main(["run", "--scenario", "constant",
                     "--out", str(tmp_path / "m.csv"),
                     "--consumer.c_ns", "-5"])
        assert code == 2
        assert "consumer.c_ns" in capsys.readouterr().err

    def test_unknown_scenario_exit_2(self, tmp_path, capsys):
        code = main(["run", "--scenario", "nope",
                     "--out", str(tmp_path / "m.csv")])
        assert code == 2

    def test_fig3_summary_reports_discard(self, tmp_path, capsys):
        code = main(["run", "--scenario", "fig3", "--seed", "0",
                     "--out", str(tmp_path / "m.csv")])
        assert code == 0
        summary = capsys.readouterr().out
        final_gamma = float(summary.split("final_gamma=")[1].split()[0])
        max_rate_raw = float(summary.split("max_rate_raw=")[1].split()[0])
        assert final_gamma < 1.0
        assert max_rate_raw > 5e6

    def test_scenario_file_and_events_out(self, tmp_path):
        scen = tmp_path / "tiny.cfg"
        scen.write_text("source.kind = constant\n"
                        "source.rate_evps = 1e4\n"
                        "source.duration_s = 0.1\n")
        out = tmp_path / "m.csv"
        events_out = tmp_path / "ev.csv"
        code = main(["run", "--scenario", str(scen), "--out", str(out),
                     "--events-out", str(events_out)])
        assert code == 0
        assert out.exists() and events_out.exists()
        assert events_out.read_text().startswith("t_us,x,y,p")

    def test_file_replay_round_trip(self, tmp_path, capsys):
        # generate events once, then replay them from disk
        events_out = tmp_path / "ev.csv"
        assert main(["run", "--scenario", "constant",
                     "--set", "source.duration_s=0.05",
                     "--out", str(tmp_path / "m1.csv"),
                     "--events-out", str(events_out)]) == 0
        assert main(["run", "--scenario", "constant",
                     "--set", "source.kind=file",
                     "--set", f"source.path={events_out}",
                     "--out", str(tmp_path / "m2.csv")]) == 0
        assert (tmp_path / "m1.csv").read_bytes() == \
            (tmp_path / "m2.csv").read_bytes()

    def test_env_base_config(self, tmp_path, monkeypatch):
        base = tmp_path / "base.cfg"
        base.write_text("source.duration_s = 0.05\nseed = 3\n")
        monkeypatch.setenv("ASAP_CONFIG", str(base))
        out = tmp_path / "m.csv"
        assert main(["run", "--scenario", "constant", "--out", str(out)]) == 0
        assert out.exists()

    def test_failed_run_leaves_no_partial_output(self, tmp_path):
        out = tmp_path / "m.csv"
        code = main(["run", "--scenario", "constant",
                     "--set", "gamma.beta=7", "--out", str(out)])
        assert code == 2
        assert not out.exists()
        assert not (tmp_path / "m.csv.tmp").exists()

    def test_bundled_scenarios_registered(self):
        assert set(SCENARIOS) >= {"fig3", "fig4", "constant", "ramp"}
