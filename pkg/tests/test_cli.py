"""Command-line interface: flags, outputs, reproducibility, exit codes."""

from __future__ import annotations

import json

from dspmaze.cli import main


def run_cli(args):
    return main(args)


class TestMazeCheck:
    def test_default_maze_passes(self, capsys):
        assert run_cli(["maze-check"]) == 0
        out = capsys.readouterr().out
        assert "maze OK" in out
        assert "final 8" in out

    def test_broken_maze_fails(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("#" * 29 + "\n")
        assert run_cli(["maze-check", "--maze", str(bad)]) == 1
        assert "maze check failed" in capsys.readouterr().err


class TestReplayCommands:
    def test_replay_dsp_writes_tables(self, tmp_path, capsys):
        out = tmp_path / "r"
        code = run_cli([
            "replay-dsp", "--rule", "1", "--episodes", "5", "--trials", "1",
            "--seed", "3", "--out", str(out),
        ])
        assert code == 0
        assert (out / "episodes.csv").exists()
        assert (out / "trials.csv").exists()
        assert (out / "summary.csv").exists()
        assert len((out / "trials.csv").read_text().splitlines()) == 1 + 8

    def test_byte_identical_reruns(self, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            run_cli([
                "replay-dsp", "--episodes", "5", "--trials", "1",
                "--seed", "11", "--out", str(out),
            ])
            outs.append(out)
        for fname in ("episodes.csv", "trials.csv", "summary.csv"):
            assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()

    def test_replay_hc(self, tmp_path):
        out = tmp_path / "hc"
        code = run_cli([
            "replay-hc", "--episodes", "5", "--trials", "1", "--sigma", "0.1",
            "--seed", "2", "--out", str(out),
        ])
        assert code == 0
        assert (out / "trials.csv").exists()

    def test_unknown_rule_id_errors(self, tmp_path, capsys):
        code = run_cli([
            "replay-dsp", "--rule", "99", "--episodes", "5", "--trials", "1",
            "--out", str(tmp_path / "x"),
        ])
        assert code == 1
        assert "99" in capsys.readouterr().err

    def test_resample_flag(self, tmp_path):
        out = tmp_path / "rs"
        code = run_cli([
            "replay-dsp", "--episodes", "6", "--trials", "1",
            "--resample-every", "3", "--seed", "1", "--out", str(out),
        ])
        assert code == 0


class TestConfigFile:
    def test_config_supplies_defaults_and_flags_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"episodes": 5, "trials": 1, "seed": 4}))
        out1 = tmp_path / "one"
        assert run_cli(["replay-dsp", "--config", str(cfg), "--out", str(out1)]) == 0
        rows = (out1 / "episodes.csv").read_text().splitlines()
        assert len(rows) == 1 + 8 * 5
        out2 = tmp_path / "two"
        assert run_cli([
            "replay-dsp", "--config", str(cfg), "--episodes", "3", "--out", str(out2),
        ]) == 0
        rows = (out2 / "episodes.csv").read_text().splitlines()
        assert len(rows) == 1 + 8 * 3

    def test_malformed_config_errors(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("[1, 2]")
        assert run_cli(["replay-dsp", "--config", str(cfg)]) == 2
        assert "config" in capsys.readouterr().err


class TestEvolveCommands:
    def test_evolve_dsp_logs(self, tmp_path):
        out = tmp_path / "evo"
        code = run_cli([
            "evolve-dsp", "--generations", "2", "--pop-size", "4", "--elites", "1",
            "--trials", "1", "--episodes", "3", "--goals", "1",
            "--seed", "7", "--out", str(out),
        ])
        assert code == 0
        log = (out / "log.csv").read_text().splitlines()
        assert len(log) == 3
        assert (out / "best_genotype.txt").exists()

    def test_evolve_dsp_byte_identical(self, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            run_cli([
                "evolve-dsp", "--generations", "1", "--pop-size", "4", "--elites", "1",
                "--trials", "1", "--episodes", "3", "--goals", "1",
                "--seed", "7", "--out", str(out),
            ])
            outs.append(out)
        assert (outs[0] / "log.csv").read_bytes() == (outs[1] / "log.csv").read_bytes()

    def test_evolve_hc(self, tmp_path):
        out = tmp_path / "evohc"
        code = run_cli([
            "evolve-hc", "--generations", "1", "--pop-size", "4", "--elites", "1",
            "--trials", "1", "--episodes", "3", "--goals", "1",
            "--seed", "2", "--out", str(out),
        ])
        assert code == 0


class TestCompareCommand:
    def test_summary_row(self, tmp_path, capsys):
        out = tmp_path / "cmp"
        code = run_cli([
            "compare", "--episodes", "5", "--trials", "1", "--seed", "5",
            "--out", str(out),
        ])
        assert code == 0
        text = (out / "compare.csv").read_text().splitlines()
        assert text[0].startswith("mode,dsp_mean_best_ep,hc_mean_best_ep,p_value")
        assert len(text) == 2
        assert "p = " in capsys.readouterr().out
