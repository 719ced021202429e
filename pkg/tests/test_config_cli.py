"""Config round-trips, CLI determinism, seed-stream independence."""

import filecmp
import os
import subprocess
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from spikelab.config import (
    ConfigError,
    ExperimentConfig,
    parse_config,
    serialize_config,
)
from spikelab.pipeline import build_reservoir, derive_seed, make_dataset


class TestConfigFormat:
    def test_round_trip_identity(self):
        cfg = ExperimentConfig()
        assert parse_config(serialize_config(cfg)) == cfg

    def test_round_trip_after_edits(self):
        text = serialize_config(ExperimentConfig())
        text = text.replace("network.lambda = 2.0", "network.lambda = 1.75")
        text = text.replace("data.noise = 0.005", "data.noise = 0.012")
        cfg = parse_config(text)
        assert cfg.network.lam == 1.75
        assert cfg.data.noise == 0.012
        assert parse_config(serialize_config(cfg)) == cfg

    def test_unknown_key_is_hard_error(self):
        with pytest.raises(ConfigError):
            parse_config("network.lambada = 2.0\n")

    def test_unknown_section_is_hard_error(self):
        with pytest.raises(ConfigError):
            parse_config("networks.lambda = 2.0\n")

    def test_bad_value_reports_location(self):
        with pytest.raises(ConfigError, match="network.n_recurrent"):
            parse_config("network.n_recurrent = many\n")

    def test_bad_variant_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("experiment.variants = HoNHoS,Bogus\n")

    def test_comments_and_blanks_ignored(self):
        cfg = parse_config("# comment\n\nrun.seed = 7  # trailing\n")
        assert cfg.run.seed == 7

    def test_missing_equals_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("run.seed 7\n")


class TestSeedStreams:
    def test_streams_are_distinct(self):
        seeds = {name: derive_seed(1, name) for name in ("topology", "neurons", "stdp", "data", "bo")}
        assert len(set(seeds.values())) == len(seeds)

    def test_variants_share_topology(self):
        cfg = replace(
            ExperimentConfig(),
            network=replace(ExperimentConfig().network, n_recurrent=60),
        )
        res_hom = build_reservoir(cfg, "HoNHoS", seed=3)
        res_het = build_reservoir(cfg, "HeNHeS", seed=3)
        np.testing.assert_array_equal(res_hom.rec_pre, res_het.rec_pre)
        np.testing.assert_array_equal(res_hom.rec_post, res_het.rec_post)
        np.testing.assert_array_equal(
            res_hom.weights_snapshot()[0], res_het.weights_snapshot()[0]
        )
        # Parameter draws differ where heterogeneity applies.
        assert not np.array_equal(res_hom.tau, res_het.tau)

    def test_dataset_shared_across_variants(self):
        cfg = ExperimentConfig()
        a = make_dataset(cfg, 5)
        b = make_dataset(cfg, 5)
        assert len(a[0]) == len(b[0])
        for ta, tb in zip(a[0], b[0]):
            np.testing.assert_array_equal(ta.neuron_ids, tb.neuron_ids)
            np.testing.assert_array_equal(ta.times, tb.times)


def _small_config_text(out_dir: Path, seed: int = 11) -> str:
    cfg = ExperimentConfig()
    cfg = replace(
        cfg,
        run=replace(cfg.run, seed=seed, out=str(out_dir)),
        network=replace(cfg.network, n_recurrent=40, n_outputs=8),
        data=replace(
            cfg.data,
            n_per_class=2,
            test_per_class=2,
            frames=6,
            height=6,
            width=6,
        ),
        experiment=replace(cfg.experiment, repeats=2, variants=("HoNHoS", "HeNHeS")),
        sweep=replace(
            cfg.sweep,
            neurons=(20, 30),
            lambdas=(1.0, 2.0),
            w_scales=(3.0, 6.0),
            train_fractions=(0.5, 1.0),
            reps=2,
        ),
    )
    return serialize_config(cfg)


def _run_cli(args, cwd):
    proc = subprocess.run(
        [sys.executable, "-m", "spikelab.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )
    return proc


def _dir_files_equal(a: Path, b: Path) -> bool:
    names_a = sorted(p.name for p in a.iterdir())
    names_b = sorted(p.name for p in b.iterdir())
    if names_a != names_b:
        return False
    match, mismatch, errors = filecmp.cmpfiles(a, b, names_a, shallow=False)
    return not mismatch and not errors


class TestCliDeterminism:
    def test_gen_data_double_run_identical(self, tmp_path):
        cfg_path = tmp_path / "cfg.txt"
        cfg_path.write_text(_small_config_text(tmp_path / "unused"))
        for run in ("a", "b"):
            proc = _run_cli(
                ["gen-data", "--config", str(cfg_path), "--out", str(tmp_path / run)],
                cwd=tmp_path,
            )
            assert proc.returncode == 0, proc.stderr
        assert _dir_files_equal(tmp_path / "a", tmp_path / "b")

    def test_ablation_double_run_identical(self, tmp_path):
        cfg_path = tmp_path / "cfg.txt"
        cfg_path.write_text(_small_config_text(tmp_path / "unused"))
        for run in ("a", "b"):
            proc = _run_cli(
                ["ablation", "--config", str(cfg_path), "--out", str(tmp_path / run)],
                cwd=tmp_path,
            )
            assert proc.returncode == 0, proc.stderr
        assert _dir_files_equal(tmp_path / "a", tmp_path / "b")

    def test_threads_do_not_change_results(self, tmp_path):
        cfg_path = tmp_path / "cfg.txt"
        cfg_path.write_text(_small_config_text(tmp_path / "unused"))
        for run, threads in (("a", "1"), ("b", "3")):
            proc = _run_cli(
                [
                    "ablation",
                    "--config",
                    str(cfg_path),
                    "--out",
                    str(tmp_path / run),
                    "--threads",
                    threads,
                ],
                cwd=tmp_path,
            )
            assert proc.returncode == 0, proc.stderr
        assert _dir_files_equal(tmp_path / "a", tmp_path / "b")

    def test_report_idempotent_and_byte_identical(self, tmp_path):
        cfg_path = tmp_path / "cfg.txt"
        cfg_path.write_text(_small_config_text(tmp_path / "unused"))
        out = tmp_path / "run"
        assert _run_cli(["ablation", "--config", str(cfg_path), "--out", str(out)], tmp_path).returncode == 0
        assert _run_cli(["report", "--out", str(out)], tmp_path).returncode == 0
        first = {p.name: p.read_bytes() for p in out.glob("*.svg")}
        summary_1 = (out / "summary.txt").read_bytes()
        assert _run_cli(["report", "--out", str(out)], tmp_path).returncode == 0
        second = {p.name: p.read_bytes() for p in out.glob("*.svg")}
        assert first == second
        assert (out / "summary.txt").read_bytes() == summary_1

    def test_report_summary_matches_csv(self, tmp_path):
        cfg_path = tmp_path / "cfg.txt"
        cfg_path.write_text(_small_config_text(tmp_path / "unused"))
        out = tmp_path / "run"
        assert _run_cli(["ablation", "--config", str(cfg_path), "--out", str(out)], tmp_path).returncode == 0
        assert _run_cli(["report", "--out", str(out)], tmp_path).returncode == 0
        from spikelab.reporting import read_csv

        header, rows = read_csv(out / "ablation_summary.csv")
        idx = {n: i for i, n in enumerate(header)}
        summary = (out / "summary.txt").read_text()
        for row in rows:
            assert f"{float(row[idx['mean_accuracy']]):.4f}" in summary

    def test_report_empty_dir(self, tmp_path):
        out = tmp_path / "empty"
        out.mkdir()
        proc = _run_cli(["report", "--out", str(out)], tmp_path)
        assert proc.returncode == 0
        assert "no artifacts" in proc.stdout

    def test_bad_config_exits_2(self, tmp_path):
        cfg_path = tmp_path / "bad.txt"
        cfg_path.write_text("network.bogus = 1\n")
        proc = _run_cli(["ablation", "--config", str(cfg_path)], tmp_path)
        assert proc.returncode == 2
        assert "config error" in proc.stderr

    def test_missing_config_exits_2(self, tmp_path):
        proc = _run_cli(["ablation", "--config", str(tmp_path / "nope.txt")], tmp_path)
        assert proc.returncode == 2

    def test_env_var_overrides_out(self, tmp_path):
        cfg_path = tmp_path / "cfg.txt"
        cfg_path.write_text(_small_config_text(tmp_path / "from_config"))
        env = dict(os.environ)
        env["SPIKELAB_OUT"] = str(tmp_path / "from_env")
        proc = subprocess.run(
            [sys.executable, "-m", "spikelab.cli", "gen-data", "--config", str(cfg_path)],
            capture_output=True,
            text=True,
            cwd=tmp_path,
            env=env,
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "from_env" / "labels.csv").exists()

    def test_selftest_passes(self, tmp_path):
        proc = _run_cli(["selftest"], tmp_path)
        assert proc.returncode == 0
        assert "FAIL" not in proc.stdout


class TestSweepCommands:
    def test_train_fraction_full_row_matches_ablation(self, tmp_path):
        cfg_path = tmp_path / "cfg.txt"
        cfg_path.write_text(_small_config_text(tmp_path / "unused"))
        out_a = tmp_path / "abl"
        out_s = tmp_path / "sweep"
        assert _run_cli(["ablation", "--config", str(cfg_path), "--out", str(out_a)], tmp_path).returncode == 0
        assert (
            _run_cli(
                ["sweep", "--axis", "train_fraction", "--config", str(cfg_path), "--out", str(out_s)],
                tmp_path,
            ).returncode
            == 0
        )
        from spikelab.reporting import read_csv

        h_a, rows_a = read_csv(out_a / "ablation_trials.csv")
        ia = {n: i for i, n in enumerate(h_a)}
        h_s, rows_s = read_csv(out_s / "sweep_train_fraction.csv")
        i_s = {n: i for i, n in enumerate(h_s)}
        abl = {
            (r[ia["variant"]], r[ia["seed"]]): r[ia["accuracy"]]
            for r in rows_a
        }
        full = [r for r in rows_s if float(r[i_s["train_fraction"]]) == 1.0]
        assert full
        for r in full:
            key = (r[i_s["variant"]], r[i_s["seed"]])
            assert r[i_s["accuracy"]] == abl[key]

    def test_lambda_wscale_grid_schema(self, tmp_path):
        cfg_path = tmp_path / "cfg.txt"
        cfg_path.write_text(_small_config_text(tmp_path / "unused"))
        out = tmp_path / "grid"
        assert (
            _run_cli(
                ["sweep", "--axis", "lambda_wscale", "--config", str(cfg_path), "--out", str(out)],
                tmp_path,
            ).returncode
            == 0
        )
        from spikelab.reporting import read_csv

        header, rows = read_csv(out / "rank_grid_HoNHoS.csv")
        assert header == ["lambda", "w_scale", "mean_rank", "sd_rank", "mean_active"]
        assert len(rows) == 4


class TestRuntimeErrorExit:
    def test_unwritable_out_dir_exits_3(self, tmp_path):
        blocker = tmp_path / "blocked"
        blocker.write_text("a file, not a directory")
        cfg_path = tmp_path / "cfg.txt"
        cfg_path.write_text(_small_config_text(tmp_path / "unused"))
        proc = _run_cli(
            ["gen-data", "--config", str(cfg_path), "--out", str(blocker)], tmp_path
        )
        assert proc.returncode == 3
        assert "runtime error" in proc.stderr
