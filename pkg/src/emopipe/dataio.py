"""PSR1 recording files, labels CSV and feature CSV round trips.

PSR1 layout (version 1, all little-endian):

====================  ======  ==========================================
field                 bytes   meaning
====================  ======  ==========================================
magic                 4       b"PSR1"
version               u16     1
subject_id            u16
trial_id              u16
n_channels            u16
n_samples             u32
sampling_rate         f32
channel name table    var     n_channels entries of (u8 length, UTF-8)
payload               var     n_channels * n_samples f32, channel-major
====================  ======  ==========================================

Samples are stored as f32 (source precision) and computed on as f64; the
f64 -> f32 narrowing on write rounds to nearest even.  The labels CSV is
``subject,trial,valence,arousal`` with one row per (subject, trial).
"""

from __future__ import annotations

import csv
import re
import struct
from pathlib import Path

import numpy as np

from .errors import CorruptionError, DataError, FormatError, ValidationError
from .model import ColumnMeta, FeatureMatrix, Ratings, Recording

PSR1_MAGIC = b"PSR1"
PSR1_VERSION = 1
_HEADER = struct.Struct("<4sHHHHIf")

LABELS_HEADER = ["subject", "trial", "valence", "arousal"]


def recording_byte_length(recording: Recording) -> int:
    """Exact on-disk size: header + name table + 4 bytes per sample."""
    names = sum(1 + len(name.encode("utf-8")) for name in recording.channel_names)
    return _HEADER.size + names + 4 * recording.n_channels * recording.n_samples


def write_recording(recording: Recording, path) -> None:
    for field_name, value in (
        ("subject_id", recording.subject_id),
        ("trial_id", recording.trial_id),
    ):
        if not (0 <= value <= 0xFFFF):
            raise ValidationError(f"{field_name}={value} does not fit in u16")
    if recording.n_channels > 0xFFFF or recording.n_samples > 0xFFFFFFFF:
        raise ValidationError("recording too large for PSR1 header fields")
    parts = [
        _HEADER.pack(
            PSR1_MAGIC,
            PSR1_VERSION,
            recording.subject_id,
            recording.trial_id,
            recording.n_channels,
            recording.n_samples,
            recording.sampling_rate,
        )
    ]
    for name in recording.channel_names:
        encoded = name.encode("utf-8")
        if not encoded or len(encoded) > 255:
            raise ValidationError(f"channel name {name!r} must encode to 1..255 bytes")
        parts.append(bytes([len(encoded)]))
        parts.append(encoded)
    parts.append(recording.samples.astype("<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_recording(path) -> Recording:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise CorruptionError(
            f"{path}: file has {len(raw)} bytes, shorter than the {_HEADER.size}-byte header"
        )
    magic, version, subject_id, trial_id, n_channels, n_samples, fs = _HEADER.unpack_from(raw)
    if magic != PSR1_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {PSR1_MAGIC!r}")
    if version != PSR1_VERSION:
        raise FormatError(f"{path}: unsupported version {version}, expected {PSR1_VERSION}")
    offset = _HEADER.size
    names = []
    for i in range(n_channels):
        if offset >= len(raw):
            raise CorruptionError(f"{path}: truncated name table at channel {i}")
        length = raw[offset]
        offset += 1
        if offset + length > len(raw):
            raise CorruptionError(f"{path}: truncated name table at channel {i}")
        try:
            names.append(raw[offset : offset + length].decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise CorruptionError(f"{path}: channel {i} name is not valid UTF-8") from exc
        offset += length
    expected = 4 * n_channels * n_samples
    actual = len(raw) - offset
    if actual != expected:
        raise CorruptionError(
            f"{path}: payload is {actual} bytes, header implies {expected} "
            f"({n_channels} channels x {n_samples} samples x 4)"
        )
    payload = np.frombuffer(raw, dtype="<f4", offset=offset)
    samples = payload.reshape(n_channels, n_samples) if n_channels else payload.reshape(0, 0)
    finite = np.isfinite(samples)
    if not finite.all():
        ch, s = np.argwhere(~finite)[0]
        raise DataError(f"{path}: non-finite value at channel {ch}, sample {s}")
    return Recording(
        subject_id=subject_id,
        trial_id=trial_id,
        sampling_rate=float(fs),
        channel_names=tuple(names),
        samples=samples.astype(np.float64),
    )


def write_labels(labels: dict, path) -> None:
    """Write a (subject, trial) -> Ratings map, sorted for deterministic bytes."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LABELS_HEADER)
        for (subject, trial) in sorted(labels):
            r = labels[(subject, trial)]
            writer.writerow([subject, trial, repr(float(r.valence)), repr(float(r.arousal))])


def read_labels(path) -> dict:
    labels = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty labels file") from None
        if header != LABELS_HEADER:
            raise FormatError(
                f"{path}: header {header} does not match {LABELS_HEADER}"
            )
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DataError(f"{path}:{row_no}: expected 4 columns, got {len(row)}")
            try:
                subject = int(row[0])
                trial = int(row[1])
                valence = float(row[2])
                arousal = float(row[3])
            except ValueError as exc:
                raise DataError(f"{path}:{row_no}: {exc}") from exc
            key = (subject, trial)
            if key in labels:
                raise ValidationError(
                    f"{path}:{row_no}: duplicate (subject, trial) = {key}"
                )
            try:
                labels[key] = Ratings(valence=valence, arousal=arousal)
            except ValidationError as exc:
                raise ValidationError(f"{path}:{row_no}: {exc}") from exc
    return labels


_COLUMN_RE = re.compile(r"^c(\d+)_(.+)_w(\d+)_(activity|mobility|complexity)$")


def write_features(features: FeatureMatrix, path) -> None:
    """CSV with subject/trial identity columns followed by the feature columns.

    Float values are written with repr so a read round trip is exact and the
    bytes are deterministic.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject", "trial"] + [m.column_name for m in features.column_meta])
        for key, row in zip(features.row_keys, features.data):
            writer.writerow([key[0], key[1]] + [repr(float(v)) for v in row])


def read_features(path) -> FeatureMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty features file") from None
        if header[:2] != ["subject", "trial"]:
            raise FormatError(f"{path}: features header must start with subject,trial")
        meta = []
        for name in header[2:]:
            match = _COLUMN_RE.match(name)
            if not match:
                raise FormatError(f"{path}: unparseable feature column {name!r}")
            meta.append(
                ColumnMeta(int(match.group(1)), match.group(2), int(match.group(3)), match.group(4))
            )
        keys = []
        rows = []
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}:{row_no}: expected {len(header)} columns, got {len(row)}"
                )
            keys.append((int(row[0]), int(row[1])))
            rows.append([float(v) for v in row[2:]])
    data = np.array(rows, dtype=np.float64).reshape(len(rows), len(meta))
    return FeatureMatrix(data=data, column_meta=tuple(meta), row_keys=tuple(keys))


def recording_paths(data_dir) -> list[Path]:
    """Sorted .psr1 files under data_dir."""
    return sorted(Path(data_dir).glob("*.psr1"))


def load_recordings(data_dir) -> list[Recording]:
    paths = recording_paths(data_dir)
    if not paths:
        raise DataError(f"no .psr1 recordings found in {data_dir}")
    return [read_recording(p) for p in paths]
