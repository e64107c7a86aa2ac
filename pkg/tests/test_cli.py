import hashlib
import json

import numpy as np
import pytest

from emopipe import dataio
from emopipe.cli import main, resolve_config

pytestmark = pytest.mark.usefixtures("mini_corpus_dir")


def run_cli(*argv):
    return main([str(a) for a in argv])


def file_hash(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


class TestSynth:
    def test_writes_corpus(self, tmp_path):
        out = tmp_path / "corpus"
        assert run_cli("synth", "--out", out, "--subjects", 2, "--trials", 2,
                       "--seconds", 4, "--seed", 3) == 0
        assert len(list(out.glob("*.psr1"))) == 4
        assert (out / "labels.csv").is_file()

    def test_same_seed_identical_bytes(self, tmp_path):
        args = ("--subjects", 2, "--trials", 2, "--seconds", 4, "--seed", 9)
        a, b = tmp_path / "a", tmp_path / "b"
        run_cli("synth", "--out", a, *args)
        run_cli("synth", "--out", b, *args)
        for pa in sorted(a.iterdir()):
            assert file_hash(pa) == file_hash(b / pa.name)


class TestExtract:
    def test_eeg_only_column_count(self, mini_corpus_dir, tmp_path):
        out = tmp_path / "features"
        assert run_cli(
            "extract", "--data-dir", mini_corpus_dir,
            "--labels", mini_corpus_dir / "labels.csv",
            "--signals", "eeg", "--out", out,
        ) == 0
        features = dataio.read_features(out / "features_eeg.csv")
        # 32 channels x 4 bands x 2 windows x 3 params on the 20 s mini corpus
        assert features.n_features == 768
        assert features.n_rows == 40

    def test_idempotent_bytes(self, mini_corpus_dir, tmp_path):
        argv = (
            "extract", "--data-dir", mini_corpus_dir,
            "--labels", mini_corpus_dir / "labels.csv", "--signals", "eeg,eog",
        )
        a, b = tmp_path / "a", tmp_path / "b"
        run_cli(*argv, "--out", a)
        run_cli(*argv, "--out", b)
        assert file_hash(a / "features_eeg-eog.csv") == file_hash(b / "features_eeg-eog.csv")

    def test_missing_inputs_enumerated(self, tmp_path, capsys):
        out = tmp_path / "o"
        code = run_cli(
            "extract", "--data-dir", tmp_path / "nowhere",
            "--labels", tmp_path / "missing.csv", "--out", out,
        )
        assert code == 3
        err = capsys.readouterr().err
        assert "nowhere" in err and "missing.csv" in err

    def test_empty_data_dir(self, tmp_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        labels = tmp_path / "labels.csv"
        labels.write_text("subject,trial,valence,arousal\n1,0,5.0,5.0\n")
        code = run_cli("extract", "--data-dir", empty, "--labels", labels,
                       "--out", tmp_path / "o")
        assert code == 3
        assert "no .psr1 recordings" in capsys.readouterr().err


class TestEvaluate:
    def test_happy_path_and_schema(self, mini_corpus_dir, tmp_path, capsys):
        out = tmp_path / "reports"
        code = run_cli(
            "evaluate", "--data-dir", mini_corpus_dir,
            "--labels", mini_corpus_dir / "labels.csv",
            "--task", "arousal2", "--signals", "eeg", "--classifier", "cart",
            "--seed", 5, "--out", out,
        )
        assert code == 0
        report_path = out / "report_arousal2_eeg_cart.json"
        payload = json.loads(report_path.read_text())
        assert set(payload) == {"config", "config_hash", "report"}
        report = payload["report"]
        assert report["task"] == "arousal2"
        assert report["classifier"] == "cart"
        assert len(report["fold_accuracies"]) == 10
        assert report["f_score"] is not None
        assert payload["config"]["seed"] == "5"
        assert "+/-" in capsys.readouterr().out

    def test_seed_flag_required(self, mini_corpus_dir, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            run_cli(
                "evaluate", "--data-dir", mini_corpus_dir,
                "--labels", mini_corpus_dir / "labels.csv", "--out", tmp_path,
            )
        assert excinfo.value.code == 2

    def test_features_file_shortcut(self, mini_corpus_dir, tmp_path):
        feats = tmp_path / "f"
        run_cli("extract", "--data-dir", mini_corpus_dir,
                "--labels", mini_corpus_dir / "labels.csv",
                "--signals", "eeg", "--out", feats)
        out = tmp_path / "reports"
        code = run_cli(
            "evaluate", "--data-dir", mini_corpus_dir,
            "--labels", mini_corpus_dir / "labels.csv",
            "--features", feats / "features_eeg.csv",
            "--task", "valence2", "--signals", "eeg", "--classifier", "knn",
            "--seed", 2, "--out", out,
        )
        assert code == 0
        assert (out / "report_valence2_eeg_knn.json").is_file()

    def test_rerun_from_embedded_config(self, mini_corpus_dir, tmp_path):
        out1 = tmp_path / "r1"
        run_cli(
            "evaluate", "--data-dir", mini_corpus_dir,
            "--labels", mini_corpus_dir / "labels.csv",
            "--task", "arousal2", "--signals", "eeg,emg", "--classifier", "knn",
            "--seed", 13, "--out", out1,
        )
        report_path = out1 / "report_arousal2_eeg-emg_knn.json"
        payload = json.loads(report_path.read_text())
        config_file = tmp_path / "replay.cfg"
        config_file.write_text(
            "".join(f"{k} = {v}\n" for k, v in payload["config"].items() if v != "")
        )
        out2 = tmp_path / "r2"
        run_cli("evaluate", "--config", config_file, "--seed", 13, "--out", out2)
        assert file_hash(report_path) == file_hash(out2 / report_path.name)

    def test_four_class_report(self, mini_corpus_dir, tmp_path, capsys):
        out = tmp_path / "r"
        code = run_cli(
            "evaluate", "--data-dir", mini_corpus_dir,
            "--labels", mini_corpus_dir / "labels.csv",
            "--task", "quadrant4", "--signals", "eeg", "--classifier", "knn",
            "--seed", 3, "--out", out,
        )
        assert code == 0
        payload = json.loads((out / "report_quadrant4_eeg_knn.json").read_text())
        report = payload["report"]
        assert report["f_score"] is None
        assert report["class_names"] == ["lalv", "lahv", "halv", "hahv"]
        assert len(report["per_class_accuracy"]) == 4
        stdout = capsys.readouterr().out
        assert "lalv=" in stdout

    def test_subject_split_mode(self, mini_corpus_dir, tmp_path):
        out = tmp_path / "r"
        code = run_cli(
            "evaluate", "--data-dir", mini_corpus_dir,
            "--labels", mini_corpus_dir / "labels.csv",
            "--task", "arousal2", "--signals", "eeg", "--classifier", "cart",
            "--split", "subject", "--seed", 4, "--out", out,
        )
        assert code == 0
        payload = json.loads((out / "report_arousal2_eeg_cart.json").read_text())
        assert payload["config"]["split"] == "subject"

    def test_env_override(self, mini_corpus_dir, tmp_path, monkeypatch):
        monkeypatch.setenv("EMOPIPE_TASK", "valence2")
        out = tmp_path / "r"
        run_cli(
            "evaluate", "--data-dir", mini_corpus_dir,
            "--labels", mini_corpus_dir / "labels.csv",
            "--signals", "eeg", "--classifier", "knn", "--seed", 1, "--out", out,
        )
        assert (out / "report_valence2_eeg_knn.json").is_file()

    def test_flag_beats_config_file(self, tmp_path):
        config_file = tmp_path / "c.cfg"
        config_file.write_text(
            "data_dir = /tmp/x\nlabels = /tmp/y\ntask = arousal2\nseed = 1\n"
        )

        class Args:
            config = str(config_file)
            task = "valence2"

        config = resolve_config(Args())
        assert config.task.value == "valence2"
        assert config.seed == 1

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        config_file = tmp_path / "c.cfg"
        config_file.write_text("nonsense = 1\n")
        code = run_cli("evaluate", "--config", config_file, "--seed", 1,
                       "--out", tmp_path / "o")
        assert code == 2

    def test_signals_must_include_eeg(self, mini_corpus_dir, tmp_path, capsys):
        code = run_cli(
            "evaluate", "--data-dir", mini_corpus_dir,
            "--labels", mini_corpus_dir / "labels.csv",
            "--signals", "eog,emg", "--seed", 1, "--out", tmp_path / "o",
        )
        assert code == 2
        assert "eeg" in capsys.readouterr().err


@pytest.fixture(scope="module")
def ablation(mini_corpus_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("ablate")
    code = run_cli(
        "ablate", "--data-dir", mini_corpus_dir,
        "--labels", mini_corpus_dir / "labels.csv",
        "--task", "arousal2", "--seed", 17, "--out", out,
    )
    assert code == 0
    return out


class TestAblate:
    def test_sixteen_cells(self, ablation):
        reports = sorted(ablation.glob("report_arousal2_*.json"))
        assert len(reports) == 16
        combined = json.loads((ablation / "ablation_arousal2.json").read_text())
        assert len(combined["cells"]) == 16
        labels = {(c["signals"], c["classifier"]) for c in combined["cells"]}
        assert len(labels) == 16

    def test_shared_fold_hash(self, ablation):
        combined = json.loads((ablation / "ablation_arousal2.json").read_text())
        hashes = {c["report"]["fold_hash"] for c in combined["cells"]}
        assert len(hashes) == 1
        assert combined["fold_hash"] in hashes

    def test_ens_not_much_worse_than_members(self, ablation):
        combined = json.loads((ablation / "ablation_arousal2.json").read_text())
        by_cell = {
            (c["signals"], c["classifier"]): c["report"]["mean_accuracy"]
            for c in combined["cells"]
        }
        for combo in ("eeg", "eeg-eog", "eeg-emg", "eeg-eog-emg"):
            ens = by_cell[(combo, "ens")]
            for clf in ("knn", "cart", "rf"):
                assert ens >= by_cell[(combo, clf)] - 0.05

    def test_rerun_identical_bytes(self, mini_corpus_dir, ablation, tmp_path):
        out2 = tmp_path / "again"
        run_cli(
            "ablate", "--data-dir", mini_corpus_dir,
            "--labels", mini_corpus_dir / "labels.csv",
            "--task", "arousal2", "--seed", 17, "--out", out2,
        )
        for path in sorted(ablation.glob("*.json")):
            assert file_hash(path) == file_hash(out2 / path.name), path.name

    def test_jobs_flag_matches_serial(self, mini_corpus_dir, ablation, tmp_path):
        out2 = tmp_path / "threaded"
        run_cli(
            "ablate", "--data-dir", mini_corpus_dir,
            "--labels", mini_corpus_dir / "labels.csv",
            "--task", "arousal2", "--seed", 17, "--jobs", 4, "--out", out2,
        )
        for path in sorted(ablation.glob("*.json")):
            assert file_hash(path) == file_hash(out2 / path.name), path.name


class TestConvertCheck:
    def test_valid_corpus_passes(self, mini_corpus_dir, capsys):
        code = run_cli("convert-check", mini_corpus_dir,
                       "--labels", mini_corpus_dir / "labels.csv")
        assert code == 0
        out = capsys.readouterr().out
        assert "0 failures" in out

    def test_corrupted_file_fails(self, mini_corpus_dir, tmp_path, capsys):
        bad_dir = tmp_path / "bad"
        bad_dir.mkdir()
        src = next(iter(sorted(mini_corpus_dir.glob("*.psr1"))))
        raw = bytearray(src.read_bytes())
        raw[:4] = b"JUNK"
        (bad_dir / "bad.psr1").write_bytes(raw)
        code = run_cli("convert-check", bad_dir)
        assert code == 3
        assert "FAIL" in capsys.readouterr().out


class TestVersion:
    def test_version_flag(self):
        with pytest.raises(SystemExit) as excinfo:
            run_cli("--version")
        assert excinfo.value.code == 0
