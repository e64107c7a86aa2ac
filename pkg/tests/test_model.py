import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emopipe.errors import ValidationError
from emopipe.model import (
    CANONICAL_BANDS,
    Band,
    ChannelGroup,
    ColumnMeta,
    FeatureMatrix,
    Ratings,
    Recording,
    SignalKind,
    Task,
    binarize_rating,
    label_for_task,
    quadrant_label,
    standard_groups,
)
from emopipe.synth import SYNTH_CHANNEL_NAMES

ratings_floats = st.floats(min_value=1.0, max_value=9.0, allow_nan=False)


class TestBinarize:
    def test_boundary_is_high(self):
        assert binarize_rating(5.0, 5.0) == 1

    def test_low(self):
        assert binarize_rating(1.0, 5.0) == 0

    def test_out_of_range_rating(self):
        with pytest.raises(ValidationError):
            binarize_rating(9.5, 5.0)
        with pytest.raises(ValidationError):
            binarize_rating(0.0, 5.0)

    def test_bad_threshold(self):
        with pytest.raises(ValidationError):
            binarize_rating(5.0, 1.0)
        with pytest.raises(ValidationError):
            binarize_rating(5.0, 9.0)

    @given(r1=ratings_floats, r2=ratings_floats, threshold=st.floats(1.1, 8.9))
    def test_monotone(self, r1, r2, threshold):
        lo, hi = min(r1, r2), max(r1, r2)
        assert binarize_rating(lo, threshold) <= binarize_rating(hi, threshold)


class TestQuadrant:
    def test_low_low(self):
        assert quadrant_label(Ratings(valence=2, arousal=2), 5.0) == 0  # lalv

    def test_high_high(self):
        assert quadrant_label(Ratings(valence=8, arousal=8), 5.0) == 3  # hahv

    def test_ordinal_order(self):
        # lalv < lahv < halv < hahv, arousal-first
        assert quadrant_label(Ratings(valence=8, arousal=2)) == 1  # lahv
        assert quadrant_label(Ratings(valence=2, arousal=8)) == 2  # halv

    @given(valence=ratings_floats, arousal=ratings_floats, threshold=st.floats(1.1, 8.9))
    def test_projects_onto_binarizations(self, valence, arousal, threshold):
        q = quadrant_label(Ratings(valence=valence, arousal=arousal), threshold)
        assert q // 2 == binarize_rating(arousal, threshold)
        assert q % 2 == binarize_rating(valence, threshold)

    def test_label_for_task(self):
        r = Ratings(valence=7, arousal=3)
        assert label_for_task(r, Task.AROUSAL2) == 0
        assert label_for_task(r, Task.VALENCE2) == 1
        assert label_for_task(r, Task.QUADRANT4) == 1


class TestRatings:
    def test_range_enforced(self):
        with pytest.raises(ValidationError):
            Ratings(valence=0.5, arousal=5)
        with pytest.raises(ValidationError):
            Ratings(valence=5, arousal=9.01)


class TestBand:
    def test_canonical_values(self):
        values = {(b.name, b.low_hz, b.high_hz) for b in CANONICAL_BANDS}
        assert values == {
            ("theta", 4.0, 8.0),
            ("alpha", 8.0, 13.0),
            ("beta", 13.0, 30.0),
            ("gamma", 30.0, 43.0),
        }

    def test_degenerate_rejected(self):
        with pytest.raises(ValidationError):
            Band("x", 10.0, 10.0)
        with pytest.raises(ValidationError):
            Band("x", -1.0, 5.0)

    def test_nyquist_rejected(self):
        with pytest.raises(ValidationError):
            Band("x", 30.0, 64.0).validate_against(128.0)


class TestRecording:
    def test_basic_invariants(self):
        rec = Recording(1, 2, 128.0, ("a", "b"), np.zeros((2, 10)))
        assert rec.n_channels == 2 and rec.n_samples == 10
        assert not rec.samples.flags.writeable

    def test_rejects_nan(self):
        bad = np.zeros((2, 5))
        bad[1, 3] = np.nan
        with pytest.raises(ValidationError, match="channel 1, sample 3"):
            Recording(1, 1, 128.0, ("a", "b"), bad)

    def test_rejects_duplicate_names(self):
        with pytest.raises(ValidationError):
            Recording(1, 1, 128.0, ("a", "a"), np.zeros((2, 5)))

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            Recording(1, 1, 128.0, (), np.zeros((0, 5)))

    def test_rejects_bad_rate(self):
        with pytest.raises(ValidationError):
            Recording(1, 1, 0.0, ("a",), np.zeros((1, 5)))


class TestGroups:
    def test_deap_layout(self):
        groups = standard_groups(SYNTH_CHANNEL_NAMES)
        assert len(groups[SignalKind.EEG].channel_indices) == 32
        assert groups[SignalKind.EOG].channel_indices == (32, 33)
        assert groups[SignalKind.EMG].channel_indices == (34, 35)

    def test_requires_eeg(self):
        with pytest.raises(ValidationError):
            standard_groups(("GSR", "Temp"))

    def test_duplicate_indices_rejected(self):
        with pytest.raises(ValidationError):
            ChannelGroup(SignalKind.EOG, (1, 1))

    def test_out_of_range_validated(self):
        rec = Recording(1, 1, 128.0, ("a",), np.zeros((1, 5)))
        with pytest.raises(ValidationError):
            ChannelGroup(SignalKind.EEG, (0, 3)).validate_against(rec)


class TestFeatureMatrix:
    def _meta(self, n):
        return tuple(ColumnMeta(c, "theta", 0, "activity") for c in range(n))

    def test_meta_length_checked(self):
        with pytest.raises(ValidationError):
            FeatureMatrix(np.zeros((2, 3)), self._meta(2), ((1, 0), (1, 1)))

    def test_meta_unique(self):
        meta = (ColumnMeta(0, "theta", 0, "activity"),) * 2
        with pytest.raises(ValidationError):
            FeatureMatrix(np.zeros((1, 2)), meta, ((1, 0),))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValidationError):
            FeatureMatrix(np.array([[np.inf]]), self._meta(1), ((1, 0),))

    def test_select_channels(self):
        meta = tuple(
            ColumnMeta(c, "theta", 0, p)
            for c in (3, 7)
            for p in ("activity", "mobility")
        )
        fm = FeatureMatrix(np.arange(8.0).reshape(2, 4), meta, ((1, 0), (1, 1)))
        sub = fm.select_channels([7])
        assert sub.n_features == 2
        assert all(m.channel_index == 7 for m in sub.column_meta)
        np.testing.assert_array_equal(sub.data, fm.data[:, 2:])
