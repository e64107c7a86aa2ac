"""Domain types shared by the whole pipeline.

Recordings, channel groups, frequency bands, self-assessment ratings, class
labels and the feature matrix all live here; every other module builds on
these.  All types are immutable after construction and safe to share across
workers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

DEAP_SAMPLING_RATE = 128.0

# Biosemi 32-channel EEG montage in DEAP order, followed by the peripheral
# channels.  Used to resolve channel groups by name.
DEAP_EEG_NAMES = (
    "Fp1", "AF3", "F3", "F7", "FC5", "FC1", "C3", "T7",
    "CP5", "CP1", "P3", "P7", "PO3", "O1", "Oz", "Pz",
    "Fp2", "AF4", "Fz", "F4", "F8", "FC6", "FC2", "Cz",
    "C4", "T8", "CP6", "CP2", "P4", "P8", "PO4", "O2",
)
DEAP_EOG_NAMES = ("hEOG", "vEOG")
DEAP_EMG_NAMES = ("zEMG", "tEMG")
DEAP_OTHER_PERIPHERAL_NAMES = ("GSR", "Resp", "Plet", "Temp")
DEAP_CHANNEL_NAMES = (
    DEAP_EEG_NAMES + DEAP_EOG_NAMES + DEAP_EMG_NAMES + DEAP_OTHER_PERIPHERAL_NAMES
)


class SignalKind(enum.Enum):
    EEG = "eeg"
    EOG = "eog"
    EMG = "emg"


class Task(enum.Enum):
    """Classification task on the valence/arousal plane."""

    AROUSAL2 = "arousal2"
    VALENCE2 = "valence2"
    QUADRANT4 = "quadrant4"

    @property
    def n_classes(self) -> int:
        return 4 if self is Task.QUADRANT4 else 2

    @property
    def class_names(self) -> tuple[str, ...]:
        if self is Task.QUADRANT4:
            return QUADRANT_NAMES
        return TWO_CLASS_NAMES


# Class ordinals are fixed so that vote and leaf tie-breaks are reproducible:
# low < high, and lalv < lahv < halv < hahv (arousal bit weighs 2, valence 1).
TWO_CLASS_NAMES = ("low", "high")
QUADRANT_NAMES = ("lalv", "lahv", "halv", "hahv")

HJORTH_PARAMETERS = ("activity", "mobility", "complexity")


@dataclass(frozen=True)
class Band:
    """One pass band, e.g. theta(4-8 Hz)."""

    name: str
    low_hz: float
    high_hz: float

    def __post_init__(self):
        if not (0.0 < self.low_hz < self.high_hz):
            raise ValidationError(
                f"band {self.name!r}: need 0 < low < high, got ({self.low_hz}, {self.high_hz})"
            )

    def validate_against(self, sampling_rate: float) -> None:
        if self.high_hz >= sampling_rate / 2.0:
            raise ValidationError(
                f"band {self.name!r}: high edge {self.high_hz} Hz is at or above "
                f"Nyquist ({sampling_rate / 2.0} Hz)"
            )


CANONICAL_BANDS = (
    Band("theta", 4.0, 8.0),
    Band("alpha", 8.0, 13.0),
    Band("beta", 13.0, 30.0),
    Band("gamma", 30.0, 43.0),
)


@dataclass(frozen=True)
class ChannelGroup:
    """Named, ordered selection of channel indices (EEG / EOG / EMG)."""

    kind: SignalKind
    channel_indices: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.channel_indices)) != len(self.channel_indices):
            raise ValidationError(f"channel group {self.kind.value}: duplicate indices")
        if any(i < 0 for i in self.channel_indices):
            raise ValidationError(f"channel group {self.kind.value}: negative index")

    def validate_against(self, recording: "Recording") -> None:
        n = recording.n_channels
        bad = [i for i in self.channel_indices if i >= n]
        if bad:
            raise ValidationError(
                f"channel group {self.kind.value}: indices {bad} out of range for "
                f"{n}-channel recording"
            )


def standard_groups(channel_names) -> dict[SignalKind, ChannelGroup]:
    """Resolve the EEG/EOG/EMG groups from a recording's channel names.

    Works for both the 36-channel synthetic layout and the 40-channel
    converted layout; unrecognized channels are simply not grouped.
    """
    eeg = set(DEAP_EEG_NAMES)
    eog = set(DEAP_EOG_NAMES)
    emg = set(DEAP_EMG_NAMES)
    idx = {SignalKind.EEG: [], SignalKind.EOG: [], SignalKind.EMG: []}
    for i, name in enumerate(channel_names):
        if name in eeg:
            idx[SignalKind.EEG].append(i)
        elif name in eog:
            idx[SignalKind.EOG].append(i)
        elif name in emg:
            idx[SignalKind.EMG].append(i)
    groups = {}
    for kind, indices in idx.items():
        if indices:
            groups[kind] = ChannelGroup(kind, tuple(indices))
    if SignalKind.EEG not in groups:
        raise ValidationError("no EEG channels found among channel names")
    return groups


@dataclass(frozen=True)
class Recording:
    """One subject/trial multichannel time series.

    ``samples`` is an [n_channels x n_samples] float64 matrix; it is made
    read-only at construction so recordings can be shared freely.
    """

    subject_id: int
    trial_id: int
    sampling_rate: float
    channel_names: tuple[str, ...]
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2:
            raise ValidationError(f"samples must be 2-D, got shape {samples.shape}")
        n_channels, n_samples = samples.shape
        if n_channels < 1 or n_samples < 1:
            raise ValidationError(f"empty recording: shape {samples.shape}")
        if len(self.channel_names) != n_channels:
            raise ValidationError(
                f"{len(self.channel_names)} channel names for {n_channels} channels"
            )
        if len(set(self.channel_names)) != n_channels:
            raise ValidationError("channel names are not unique")
        if not self.sampling_rate > 0:
            raise ValidationError(f"sampling_rate must be > 0, got {self.sampling_rate}")
        if not np.isfinite(samples).all():
            ch, s = np.argwhere(~np.isfinite(samples))[0]
            raise ValidationError(
                f"non-finite sample at channel {ch}, sample {s} "
                f"(subject {self.subject_id}, trial {self.trial_id})"
            )
        samples = samples.copy() if samples.flags.writeable else samples
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "channel_names", tuple(self.channel_names))

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class Ratings:
    """Self-assessed valence/arousal on the 1-9 scale."""

    valence: float
    arousal: float

    def __post_init__(self):
        for name, value in (("valence", self.valence), ("arousal", self.arousal)):
            if not (1.0 <= value <= 9.0):
                raise ValidationError(f"{name} rating {value} outside [1, 9]")


def binarize_rating(rating: float, threshold: float = 5.0) -> int:
    """Map a 1-9 rating to the low/high ordinal (0/1): high iff rating >= threshold."""
    if not (1.0 <= rating <= 9.0):
        raise ValidationError(f"rating {rating} outside [1, 9]")
    if not (1.0 < threshold < 9.0):
        raise ValidationError(f"threshold {threshold} outside (1, 9)")
    return 1 if rating >= threshold else 0


def quadrant_label(ratings: Ratings, threshold: float = 5.0) -> int:
    """Map ratings to a quadrant ordinal: lalv=0, lahv=1, halv=2, hahv=3.

    Arousal-first naming: the first letter pair is the arousal level, the
    second the valence level, so the ordinal is 2*arousal_high + valence_high.
    """
    a = binarize_rating(ratings.arousal, threshold)
    v = binarize_rating(ratings.valence, threshold)
    return 2 * a + v


def label_for_task(ratings: Ratings, task: Task, threshold: float = 5.0) -> int:
    if task is Task.AROUSAL2:
        return binarize_rating(ratings.arousal, threshold)
    if task is Task.VALENCE2:
        return binarize_rating(ratings.valence, threshold)
    return quadrant_label(ratings, threshold)


@dataclass(frozen=True)
class ColumnMeta:
    """Provenance of one feature column."""

    channel_index: int
    band: str
    window_index: int
    parameter: str  # one of HJORTH_PARAMETERS

    def __post_init__(self):
        if self.parameter not in HJORTH_PARAMETERS:
            raise ValidationError(f"unknown Hjorth parameter {self.parameter!r}")

    @property
    def column_name(self) -> str:
        return f"c{self.channel_index:02d}_{self.band}_w{self.window_index}_{self.parameter}"


@dataclass(frozen=True)
class FeatureMatrix:
    """Samples-by-features table with per-column provenance.

    ``row_keys`` carries the (subject_id, trial_id) identity of each row so
    labels can be joined later.
    """

    data: np.ndarray
    column_meta: tuple[ColumnMeta, ...]
    row_keys: tuple[tuple[int, int], ...]

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValidationError(f"feature data must be 2-D, got shape {data.shape}")
        if len(self.column_meta) != data.shape[1]:
            raise ValidationError(
                f"{len(self.column_meta)} column_meta entries for {data.shape[1]} columns"
            )
        if len(self.row_keys) != data.shape[0]:
            raise ValidationError(
                f"{len(self.row_keys)} row keys for {data.shape[0]} rows"
            )
        if len(set(self.column_meta)) != len(self.column_meta):
            raise ValidationError("column_meta tuples are not unique")
        if data.size and not np.isfinite(data).all():
            raise ValidationError("feature matrix contains non-finite values")
        data = data.copy() if data.flags.writeable else data
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "column_meta", tuple(self.column_meta))
        object.__setattr__(self, "row_keys", tuple(self.row_keys))

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_features(self) -> int:
        return self.data.shape[1]

    def select_channels(self, channel_indices) -> "FeatureMatrix":
        """Column subset restricted to the given channels, order preserved."""
        wanted = set(channel_indices)
        cols = [i for i, m in enumerate(self.column_meta) if m.channel_index in wanted]
        return FeatureMatrix(
            data=self.data[:, cols],
            column_meta=tuple(self.column_meta[i] for i in cols),
            row_keys=self.row_keys,
        )
