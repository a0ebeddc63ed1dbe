import numpy as np
import pytest

from feature_transfer.cli import cli_dispatch
from feature_transfer.evaluation import metric_lines
from feature_transfer.feature_store import load_features
from feature_transfer.pipeline import (PipelineConfig, StageError,
                                       build_config, load_config_file,
                                       run_baseline, run_pipeline)


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    """Small paired HR/LR train/test files shared by the CLI tests."""
    out = tmp_path_factory.mktemp("synth")
    rc = cli_dispatch([
        "synth", "--clusters", "3", "--per-cluster", "40", "--dim", "12",
        "--separation", "10", "--lr-rank", "6", "--lr-noise", "1.0",
        "--seed", "3", "--train-fraction", "0.7", "--out", str(out),
    ])
    assert rc == 0
    return out


def pipeline_args(synth_dir, out_dir, seed="3"):
    return [
        "--hr-train", str(synth_dir / "hr_train.udft"),
        "--lr-train", str(synth_dir / "lr_train.udft"),
        "--lr-test", str(synth_dir / "lr_test.udft"),
        "--hr-test", str(synth_dir / "hr_test.udft"),
        "-k", "3", "--n1", "8", "--iters", "80", "--batch-size", "16",
        "--lr0", "0.02", "--seed", seed, "--out-dir", str(out_dir),
    ]


class TestCliBasics:
    def test_unknown_subcommand_exits_2(self, capsys):
        assert cli_dispatch(["frobnicate"]) == 2
        assert "usage" in capsys.readouterr().err.lower()

    def test_unknown_flag_exits_2(self):
        assert cli_dispatch(["synth", "--bogus", "1"]) == 2

    def test_missing_file_exits_1(self, tmp_path, capsys):
        rc = cli_dispatch(["cluster", "--features", str(tmp_path / "nope.udft"),
                           "-k", "2", "--out", str(tmp_path / "m.ukmc")])
        assert rc == 1
        assert "error" in capsys.readouterr().err.lower()

    def test_synth_without_fraction_writes_two_files(self, tmp_path):
        rc = cli_dispatch(["synth", "--clusters", "2", "--per-cluster", "5",
                           "--dim", "4", "--seed", "1", "--out", str(tmp_path)])
        assert rc == 0
        assert sorted(p.name for p in tmp_path.iterdir()) == ["hr.udft", "lr.udft"]

    def test_synth_csv_format(self, tmp_path):
        rc = cli_dispatch(["synth", "--clusters", "2", "--per-cluster", "4",
                           "--dim", "3", "--seed", "1", "--format", "csv",
                           "--out", str(tmp_path)])
        assert rc == 0
        ds = load_features(tmp_path / "hr.csv", format="csv")
        assert (ds.n, ds.d, ds.n_classes) == (8, 3, 2)


class TestConfigFile:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment\nk=7\nlr0=0.5\nap_mode=continuous\n\nout_dir=x\n")
        values = load_config_file(path)
        assert values == {"k": 7, "lr0": 0.5, "ap_mode": "continuous", "out_dir": "x"}

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("nonsense=1\n")
        with pytest.raises(KeyError):
            load_config_file(path)

    def test_cli_overrides_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("k=7\nseed=1\n")
        cfg = build_config(path, {"seed": 9, "k": None})
        assert cfg.k == 7 and cfg.seed == 9

    def test_bad_ap_mode_rejected(self):
        with pytest.raises(ValueError):
            PipelineConfig(ap_mode="something")

    def test_threads_env_default(self, monkeypatch):
        monkeypatch.setenv("FEATURE_TRANSFER_THREADS", "3")
        assert build_config(None, {}).threads == 3
        # explicit settings beat the environment
        assert build_config(None, {"threads": 2}).threads == 2
        monkeypatch.setenv("FEATURE_TRANSFER_THREADS", "junk")
        assert build_config(None, {}).threads == 1


class TestPipelineRun:
    def test_artifacts_and_report(self, synth_dir, tmp_path):
        out = tmp_path / "run"
        rc = cli_dispatch(["pipeline"] + pipeline_args(synth_dir, out))
        assert rc == 0
        for name in ["kmeans.ukmc", "lr_train_pseudo.udft", "transfer.utnp",
                     "lr_train_transferred.udft", "lr_test_transferred.udft",
                     "svm.usvm", "report.kv", "report.txt", "log.txt"]:
            assert (out / name).exists(), name
        kv = (out / "report.kv").read_text()
        assert "config.seed=3" in kv  # resolved config echoed
        assert "map=" in kv

    def test_transferred_width_is_k(self, synth_dir, tmp_path):
        out = tmp_path / "run"
        cli_dispatch(["pipeline"] + pipeline_args(synth_dir, out))
        transferred = load_features(out / "lr_test_transferred.udft")
        assert transferred.d == 3

    def test_determinism_byte_identical_reports(self, synth_dir, tmp_path):
        out = tmp_path / "run"
        assert cli_dispatch(["pipeline"] + pipeline_args(synth_dir, out)) == 0
        first_kv = (out / "report.kv").read_bytes()
        first_txt = (out / "report.txt").read_bytes()
        assert cli_dispatch(["pipeline"] + pipeline_args(synth_dir, out)) == 0
        assert (out / "report.kv").read_bytes() == first_kv
        assert (out / "report.txt").read_bytes() == first_txt

    def test_stage_chain_reproduces_pipeline(self, synth_dir, tmp_path):
        mono = tmp_path / "mono"
        assert cli_dispatch(["pipeline"] + pipeline_args(synth_dir, mono)) == 0

        work = tmp_path / "stages"
        work.mkdir()
        steps = [
            ["cluster", "--features", str(synth_dir / "hr_train.udft"), "-k", "3",
             "--seed", "3", "--out", str(work / "km.ukmc")],
            ["pseudo-label", "--model", str(work / "km.ukmc"),
             "--features", str(synth_dir / "lr_train.udft"),
             "--out", str(work / "lr_train_pl.udft")],
            ["train-transfer", "--features", str(work / "lr_train_pl.udft"),
             "--n1", "8", "--iters", "80", "--batch-size", "16", "--lr0", "0.02",
             "--seed", "3", "--out", str(work / "net.utnp")],
            ["transform", "--checkpoint", str(work / "net.utnp"),
             "--features", str(synth_dir / "lr_train.udft"),
             "--out", str(work / "train_t.udft")],
            ["transform", "--checkpoint", str(work / "net.utnp"),
             "--features", str(synth_dir / "lr_test.udft"),
             "--out", str(work / "test_t.udft")],
            ["train-svm", "--features", str(work / "train_t.udft"),
             "--seed", "3", "--out", str(work / "svm.usvm")],
            ["evaluate", "--model", str(work / "svm.usvm"),
             "--features", str(work / "test_t.udft"),
             "--out-dir", str(work / "eval")],
        ]
        for argv in steps:
            assert cli_dispatch(argv) == 0, argv[0]

        # intermediate artifacts are byte-identical to the monolithic run's
        assert (work / "km.ukmc").read_bytes() == (mono / "kmeans.ukmc").read_bytes()
        assert (work / "net.utnp").read_bytes() == (mono / "transfer.utnp").read_bytes()
        assert (work / "svm.usvm").read_bytes() == (mono / "svm.usvm").read_bytes()
        # and the evaluation metrics match exactly (config echoes differ)
        chained = metric_lines((work / "eval" / "report.kv").read_text())
        monolithic = metric_lines((mono / "report.kv").read_text())
        assert chained == monolithic

    def test_pipeline_from_config_file(self, synth_dir, tmp_path):
        out = tmp_path / "cfg_run"
        cfg = tmp_path / "run.cfg"
        cfg.write_text("\n".join([
            f"hr_train={synth_dir / 'hr_train.udft'}",
            f"lr_train={synth_dir / 'lr_train.udft'}",
            f"lr_test={synth_dir / 'lr_test.udft'}",
            "k=3", "n1=8", "iters=80", "batch_size=16", "lr0=0.02",
            "seed=3", f"out_dir={out}",
        ]) + "\n")
        assert cli_dispatch(["pipeline", "--config", str(cfg)]) == 0
        flags = tmp_path / "flags_run"
        assert cli_dispatch(["pipeline"] + pipeline_args(synth_dir, flags)) == 0
        assert metric_lines((out / "report.kv").read_text()) == \
            metric_lines((flags / "report.kv").read_text())

    def test_failure_marker(self, synth_dir, tmp_path):
        out = tmp_path / "fail"
        cfg = PipelineConfig(
            hr_train=str(synth_dir / "hr_train.udft"),
            lr_train=str(synth_dir / "lr_train.udft"),
            lr_test=str(synth_dir / "lr_test.udft"),
            k=100_000,  # cannot cluster 84 rows into 100k groups
            n1=8, iters=10, batch_size=16, seed=3, out_dir=str(out),
        )
        with pytest.raises(StageError, match="cluster"):
            run_pipeline(cfg)
        assert (out / "FAILED").read_text().startswith("cluster")


class TestBaselines:
    def test_lr_and_hr_baselines(self, synth_dir, tmp_path):
        out = tmp_path / "runs"
        for which in ("lr", "hr"):
            rc = cli_dispatch(["baseline", "--which", which]
                              + pipeline_args(synth_dir, out))
            assert rc == 0
            assert (out / f"baseline-{which}" / "report.kv").exists()

    def test_zero_noise_baselines_match(self, tmp_path):
        # identity degradation: HR and LR files are identical, so both
        # baselines produce the same mAP
        data = tmp_path / "data"
        cli_dispatch(["synth", "--clusters", "3", "--per-cluster", "20",
                      "--dim", "8", "--lr-noise", "0.0", "--seed", "5",
                      "--train-fraction", "0.7", "--out", str(data)])
        out = tmp_path / "runs"
        argv = ["--hr-train", str(data / "hr_train.udft"),
                "--lr-train", str(data / "lr_train.udft"),
                "--lr-test", str(data / "lr_test.udft"),
                "--hr-test", str(data / "hr_test.udft"),
                "--seed", "5", "--out-dir", str(out)]
        assert cli_dispatch(["baseline", "--which", "hr"] + argv) == 0
        assert cli_dispatch(["baseline", "--which", "lr"] + argv) == 0
        hr_kv = metric_lines((out / "baseline-hr" / "report.kv").read_text())
        lr_kv = metric_lines((out / "baseline-lr" / "report.kv").read_text())
        assert hr_kv == lr_kv

    def test_hr_baseline_needs_hr_test(self, synth_dir, tmp_path):
        cfg = PipelineConfig(hr_train=str(synth_dir / "hr_train.udft"),
                             lr_train=str(synth_dir / "lr_train.udft"),
                             lr_test=str(synth_dir / "lr_test.udft"),
                             out_dir=str(tmp_path / "o"))
        with pytest.raises(ValueError, match="test feature file"):
            run_baseline(cfg, "hr")


class TestGridCli:
    def test_four_cell_grid(self, synth_dir, tmp_path):
        out = tmp_path / "grid"
        rc = cli_dispatch([
            "grid-search", "--n1", "4,8", "--n2", "2,3",
            "--hr-train", str(synth_dir / "hr_train.udft"),
            "--lr-train", str(synth_dir / "lr_train.udft"),
            "--lr-test", str(synth_dir / "lr_test.udft"),
            "--iters", "40", "--batch-size", "16",
            "--seed", "3", "--out-dir", str(out),
        ])
        assert rc == 0
        csv_lines = (out / "grid.csv").read_text().strip().splitlines()
        assert csv_lines[0] == "n1,n2,map,seconds"
        assert len(csv_lines) == 5
        assert (out / "grid.txt").exists()


class TestNormalization:
    def test_l2_flag_changes_pipeline(self, synth_dir, tmp_path):
        a = tmp_path / "plain"
        b = tmp_path / "l2"
        cli_dispatch(["pipeline"] + pipeline_args(synth_dir, a))
        cli_dispatch(["pipeline"] + pipeline_args(synth_dir, b) + ["--normalize", "l2"])
        norms = np.linalg.norm(
            load_features(b / "lr_train_pseudo.udft").data.astype(np.float64), axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-5)
        assert (a / "report.kv").read_text() != (b / "report.kv").read_text()
