"""Hjorth parameters over fixed windows of band-filtered channels.

Conventions, fixed so results are comparable across implementations:

* the discrete derivative is the *unscaled* forward difference
  ``y[k+1] - y[k]`` (mobility and complexity are ratios, so a constant
  1/dt factor would cancel anyway);
* variances are population variances (divide by n);
* complexity defaults to the literal form ``sqrt(mobility(dy) / mobility(y))``
  with an extra square root around the classical ratio; pass
  ``complexity_form="classical"`` for the ratio itself.  A pure sine scores
  about 1 under either form;
* a zero-variance window reports (0, 0, 0) instead of NaN so downstream
  classifiers stay total.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import filters, kernels
from .errors import ComputationError, ValidationError
from .model import (
    HJORTH_PARAMETERS,
    Band,
    ChannelGroup,
    ColumnMeta,
    FeatureMatrix,
    Recording,
)

COMPLEXITY_FORMS = ("paper", "classical")


@dataclass(frozen=True)
class WindowSpec:
    """Fixed segmentation of a trial into analysis windows."""

    length_seconds: float = 10.0
    overlap_seconds: float = 0.0

    def __post_init__(self):
        if not self.length_seconds > 0:
            raise ValidationError(f"window length must be > 0, got {self.length_seconds}")
        if not (0.0 <= self.overlap_seconds < self.length_seconds):
            raise ValidationError(
                f"overlap {self.overlap_seconds} not in [0, {self.length_seconds})"
            )

    def length_samples(self, sampling_rate: float) -> int:
        n = round(self.length_seconds * sampling_rate)
        if n < 3:
            raise ValidationError(
                f"window of {self.length_seconds}s at {sampling_rate}Hz has {n} samples; "
                "complexity needs at least 3"
            )
        return n

    def step_samples(self, sampling_rate: float) -> int:
        return self.length_samples(sampling_rate) - round(
            self.overlap_seconds * sampling_rate
        )

    def count(self, n_samples: int, sampling_rate: float) -> int:
        length = self.length_samples(sampling_rate)
        step = self.step_samples(sampling_rate)
        if n_samples < length:
            return 0
        return 1 + (n_samples - length) // step


def _validate_window(window, min_len: int) -> np.ndarray:
    w = np.asarray(window, dtype=np.float64)
    if w.ndim != 1:
        raise ValidationError(f"window must be 1-D, got shape {w.shape}")
    if w.size < min_len:
        raise ValidationError(f"window has {w.size} samples, need at least {min_len}")
    if not np.isfinite(w).all():
        raise ValidationError("window contains non-finite values")
    return w


def activity(window) -> float:
    """Signal power: population variance of the window."""
    w = _validate_window(window, 1)
    return float(np.var(w))


def derivative(window) -> np.ndarray:
    """Unscaled first forward difference, length n-1."""
    w = _validate_window(window, 2)
    return np.diff(w)


def mobility(window) -> float:
    """sqrt(var(dy) / var(y)); mean-frequency proxy.  0 for a constant window."""
    w = _validate_window(window, 2)
    v = np.var(w)
    if v == 0.0:
        return 0.0
    return float(np.sqrt(np.var(np.diff(w)) / v))


def complexity(window, form: str = "paper") -> float:
    """Frequency-change proxy; about 1 for a pure sine.  0 if mobility is 0."""
    w = _validate_window(window, 3)
    if form not in COMPLEXITY_FORMS:
        raise ValidationError(f"complexity form must be one of {COMPLEXITY_FORMS}")
    m = mobility(w)
    if m == 0.0:
        return 0.0
    ratio = mobility(np.diff(w)) / m
    return float(np.sqrt(ratio)) if form == "paper" else float(ratio)


def hjorth_triple(window, form: str = "paper") -> tuple[float, float, float]:
    """(activity, mobility, complexity) of one window."""
    w = _validate_window(window, 3)
    a = activity(w)
    if a == 0.0:
        return 0.0, 0.0, 0.0
    return a, mobility(w), complexity(w, form)


def _triples_from_variances(v0, v1, v2, form: str):
    """Vectorized (activity, mobility, complexity) from window variances.

    Matches the scalar functions' degenerate rules: zero activity gives
    (0,0,0) and zero mobility gives complexity 0.
    """
    act = v0
    with np.errstate(divide="ignore", invalid="ignore"):
        mob = np.where(v0 > 0.0, np.sqrt(v1 / v0), 0.0)
        mob_d = np.where(v1 > 0.0, np.sqrt(v2 / v1), 0.0)
        ratio = np.where(mob > 0.0, mob_d / np.where(mob > 0.0, mob, 1.0), 0.0)
    comp = np.sqrt(ratio) if form == "paper" else ratio
    act = np.where(v0 > 0.0, act, 0.0)
    return act, mob, comp


def extract_features(
    recordings,
    groups,
    bands,
    window: WindowSpec,
    filter_bank=None,
    order: int = filters.DEFAULT_ORDER,
    complexity_form: str = "paper",
) -> FeatureMatrix:
    """Windowed Hjorth features of every (channel, band) pair, one row per recording.

    Columns are ordered channel-major: for each selected channel (group order),
    each band, each window, the triple activity < mobility < complexity.
    Trailing partial windows are discarded.

    Parameters
    ----------
    recordings : sequence of Recording, all sharing sampling rate and length
    groups : sequence of ChannelGroup, concatenated in the given order
    bands : sequence of Band
    window : WindowSpec
    filter_bank : dict band name -> DigitalFilter, optional
        Designed on demand when omitted.
    """
    recordings = list(recordings)
    if not recordings:
        raise ValidationError("no recordings given")
    if complexity_form not in COMPLEXITY_FORMS:
        raise ValidationError(f"complexity form must be one of {COMPLEXITY_FORMS}")
    first = recordings[0]
    fs = first.sampling_rate
    n_samples = first.n_samples
    for rec in recordings:
        if rec.sampling_rate != fs or rec.n_samples != n_samples:
            raise ValidationError(
                f"recording (subject {rec.subject_id}, trial {rec.trial_id}) has "
                f"fs={rec.sampling_rate}, n={rec.n_samples}; expected fs={fs}, n={n_samples}"
            )
        for group in groups:
            group.validate_against(rec)

    channels = [i for group in groups for i in group.channel_indices]
    if len(set(channels)) != len(channels):
        raise ValidationError("channel groups overlap")
    bands = list(bands)
    if filter_bank is None:
        filter_bank = filters.design_filter_bank(bands, fs, order)

    wlen = window.length_samples(fs)
    step = window.step_samples(fs)
    n_windows = window.count(n_samples, fs)
    if n_windows < 1:
        raise ValidationError(
            f"trial of {n_samples} samples is shorter than one {wlen}-sample window"
        )

    n_ch = len(channels)
    n_bands = len(bands)
    n_features = n_ch * n_bands * n_windows * 3
    data = np.empty((len(recordings), n_features))
    starts = np.arange(n_windows) * step

    for r, rec in enumerate(recordings):
        raw = rec.samples[channels, :]
        for b, band in enumerate(bands):
            filtered = filters.apply_batch(filter_bank[band.name], raw)
            if not np.isfinite(filtered).all():
                bad_ch = channels[int(np.argwhere(~np.isfinite(filtered))[0][0])]
                raise ComputationError(
                    f"non-finite filter output on channel {bad_ch}, band {band.name} "
                    f"(subject {rec.subject_id}, trial {rec.trial_id})"
                )
            # windows stacked as (n_ch * n_windows, wlen), channel-major
            wins = np.stack(
                [filtered[:, s : s + wlen] for s in starts], axis=1
            ).reshape(n_ch * n_windows, wlen)
            v0, v1, v2 = kernels.window_variances(np.ascontiguousarray(wins))
            act, mob, comp = _triples_from_variances(v0, v1, v2, complexity_form)
            # slot-addressed writes: feature index is
            # ((ch * n_bands + b) * n_windows + win) * 3 + param
            block = np.stack([act, mob, comp], axis=1).reshape(n_ch, n_windows * 3)
            cols = (
                (np.arange(n_ch)[:, None] * n_bands + b) * (n_windows * 3)
                + np.arange(n_windows * 3)[None, :]
            )
            data[r, cols.ravel()] = block.ravel()

    column_meta = tuple(
        ColumnMeta(ch, band.name, w, param)
        for ch in channels
        for band in bands
        for w in range(n_windows)
        for param in HJORTH_PARAMETERS
    )
    row_keys = tuple((rec.subject_id, rec.trial_id) for rec in recordings)
    return FeatureMatrix(data=data, column_meta=column_meta, row_keys=row_keys)
