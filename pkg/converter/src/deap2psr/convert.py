"""Convert DEAP preprocessed per-subject archives to PSR1 files + labels CSV.

A DEAP preprocessed Python archive (s01.dat .. s32.dat) is a latin1 pickle of
``{"data": float64[40, 40, 8064 or 7680], "labels": float64[40, 4]}`` with
labels columns (valence, arousal, dominance, liking) on the 1-9 scale.  Some
distributions include the 3 s pre-trial baseline (8064 = 63 s x 128 Hz);
``trim_baseline="auto"`` drops the first 384 samples in that case so every
trial is the 7680-sample (60 s) experimental segment.

This package writes the PSR1 wire format directly (it is the pipeline's
documented interchange contract) and never imports the pipeline package;
validation goes through the pipeline's ``convert-check`` subcommand as a
subprocess.
"""

from __future__ import annotations

import csv
import hashlib
import json
import pickle
import re
import struct
import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channels import (
    BASELINE_SAMPLES,
    DEAP_CHANNELS,
    N_CHANNELS,
    N_TRIALS,
    SAMPLING_RATE,
    TRIAL_SAMPLES,
)

PSR1_MAGIC = b"PSR1"
PSR1_VERSION = 1
_HEADER = struct.Struct("<4sHHHHIf")

LABELS_HEADER = ["subject", "trial", "valence", "arousal"]

TRIM_MODES = ("auto", "on", "off")


class ConversionError(Exception):
    pass


@dataclass
class ConversionManifest:
    input_path: str
    output_dir: str
    subject_id: int
    channel_names: tuple = DEAP_CHANNELS
    trimmed_baseline: bool = False
    files: dict = field(default_factory=dict)  # filename -> sha256
    ratings: dict = field(default_factory=dict)  # trial -> (valence, arousal)

    def to_dict(self) -> dict:
        return {
            "input_path": self.input_path,
            "output_dir": self.output_dir,
            "subject_id": self.subject_id,
            "channel_names": list(self.channel_names),
            "trimmed_baseline": self.trimmed_baseline,
            "files": dict(sorted(self.files.items())),
            "n_trials": len(self.files),
        }


def subject_id_from_path(path) -> int:
    match = re.search(r"s(\d+)", Path(path).stem, re.IGNORECASE)
    if not match:
        raise ConversionError(
            f"{path}: cannot infer subject id from filename (expected sNN...)"
        )
    return int(match.group(1))


def load_archive(path):
    try:
        with open(path, "rb") as fh:
            archive = pickle.load(fh, encoding="latin1")
    except (pickle.UnpicklingError, EOFError, UnicodeDecodeError) as exc:
        raise ConversionError(f"{path}: not a readable DEAP pickle: {exc}") from exc
    if not isinstance(archive, dict) or "data" not in archive or "labels" not in archive:
        raise ConversionError(f"{path}: archive must be a dict with 'data' and 'labels'")
    data = np.asarray(archive["data"], dtype=np.float64)
    labels = np.asarray(archive["labels"], dtype=np.float64)
    if data.ndim != 3 or data.shape[0] != N_TRIALS or data.shape[1] != N_CHANNELS or data.shape[2] not in (TRIAL_SAMPLES, TRIAL_SAMPLES + BASELINE_SAMPLES):
        raise ConversionError(
            f"{path}: data shape {data.shape}, expected ({N_TRIALS}, {N_CHANNELS}, "
            f"{TRIAL_SAMPLES + BASELINE_SAMPLES} or {TRIAL_SAMPLES})"
        )
    if labels.shape != (N_TRIALS, 4):
        raise ConversionError(
            f"{path}: labels shape {labels.shape}, expected ({N_TRIALS}, 4)"
        )
    return data, labels


def apply_trim(data: np.ndarray, mode: str, path) -> tuple[np.ndarray, bool]:
    if mode not in TRIM_MODES:
        raise ConversionError(f"trim mode {mode!r} not in {TRIM_MODES}")
    n_samples = data.shape[2]
    has_baseline = n_samples == TRIAL_SAMPLES + BASELINE_SAMPLES
    if mode == "off":
        return data, False
    if mode == "on" and not has_baseline:
        raise ConversionError(
            f"{path}: --trim-baseline on requires {TRIAL_SAMPLES + BASELINE_SAMPLES} "
            f"samples, found {n_samples}"
        )
    if has_baseline:
        return data[:, :, BASELINE_SAMPLES:], True
    return data, False


def write_psr1(path, subject_id: int, trial_id: int, samples: np.ndarray) -> str:
    """Write one recording in the PSR1 wire format; returns its sha256."""
    n_channels, n_samples = samples.shape
    parts = [
        _HEADER.pack(
            PSR1_MAGIC, PSR1_VERSION, subject_id, trial_id,
            n_channels, n_samples, SAMPLING_RATE,
        )
    ]
    for name in DEAP_CHANNELS[:n_channels]:
        encoded = name.encode("utf-8")
        parts.append(bytes([len(encoded)]))
        parts.append(encoded)
    parts.append(np.ascontiguousarray(samples).astype("<f4").tobytes())
    blob = b"".join(parts)
    Path(path).write_bytes(blob)
    return hashlib.sha256(blob).hexdigest()


def convert_subject(input_path, output_dir, trim_baseline: str = "auto") -> ConversionManifest:
    """One subject archive -> 40 PSR1 files plus the subject's 40 rating rows."""
    input_path = Path(input_path)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    subject_id = subject_id_from_path(input_path)
    data, labels = load_archive(input_path)
    data, trimmed = apply_trim(data, trim_baseline, input_path)

    manifest = ConversionManifest(
        input_path=str(input_path),
        output_dir=str(output_dir),
        subject_id=subject_id,
        trimmed_baseline=trimmed,
    )
    for trial in range(N_TRIALS):
        valence, arousal = float(labels[trial, 0]), float(labels[trial, 1])
        for name, value in (("valence", valence), ("arousal", arousal)):
            if not (1.0 <= value <= 9.0):
                raise ConversionError(
                    f"{input_path}: trial {trial} {name} rating {value} outside [1, 9]"
                )
        filename = f"s{subject_id:02d}_t{trial:02d}.psr1"
        digest = write_psr1(output_dir / filename, subject_id, trial, data[trial])
        manifest.files[filename] = digest
        manifest.ratings[trial] = (valence, arousal)
    return manifest


def merge_labels_csv(path, manifests) -> int:
    """Merge the manifests' ratings into the labels CSV (deterministic order).

    Existing rows for other subjects are kept; re-converting a subject
    overwrites its rows.  Returns the total row count.
    """
    path = Path(path)
    rows = {}
    if path.is_file():
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != LABELS_HEADER:
                raise ConversionError(f"{path}: existing file has header {header}")
            for row in reader:
                if row:
                    rows[(int(row[0]), int(row[1]))] = (row[2], row[3])
    for manifest in manifests:
        for trial, (valence, arousal) in manifest.ratings.items():
            rows[(manifest.subject_id, trial)] = (repr(valence), repr(arousal))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LABELS_HEADER)
        for (subject, trial) in sorted(rows):
            valence, arousal = rows[(subject, trial)]
            writer.writerow([subject, trial, valence, arousal])
    return len(rows)


def run_convert_check(output_dir, labels_path=None) -> bool:
    """Validate emitted files with the pipeline's own reader (subprocess)."""
    cmd = [sys.executable, "-m", "emopipe", "convert-check", str(output_dir)]
    if labels_path is not None:
        cmd += ["--labels", str(labels_path)]
    result = subprocess.run(cmd, capture_output=True, text=True)
    if result.returncode != 0:
        print(result.stdout, end="")
        print(result.stderr, end="", file=sys.stderr)
    return result.returncode == 0


def write_manifest(manifests, path) -> None:
    payload = [m.to_dict() for m in manifests]
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
