import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from emopipe import dataio, synth


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.passed:
        status = "PASS"
    elif report.skipped:
        status = "SKIP"
    else:
        status = "FAIL"
    print(f"\nACCEPTANCE {name}: {status}", flush=True)


@pytest.fixture(scope="session")
def acceptance_corpus():
    """The end-to-end corpus: 128 trials, beta-power separation d ~ 2, sigma 1."""
    spec = synth.SynthSpec(seed=42)
    recordings, labels = synth.generate_corpus(spec)
    return spec, recordings, labels


@pytest.fixture(scope="session")
def mini_corpus_dir(tmp_path_factory):
    """Small on-disk corpus for CLI tests: 40 trials of 20 s (2 windows each)."""
    out = tmp_path_factory.mktemp("mini_corpus")
    spec = synth.SynthSpec(n_subjects=10, n_trials=4, n_seconds=20.0, seed=11)
    recordings, labels = synth.generate_corpus(spec)
    for rec in recordings:
        dataio.write_recording(rec, out / f"rec_s{rec.subject_id:03d}_t{rec.trial_id:02d}.psr1")
    dataio.write_labels(labels, out / "labels.csv")
    return out


@pytest.fixture()
def rng():
    return np.random.default_rng(2024)
