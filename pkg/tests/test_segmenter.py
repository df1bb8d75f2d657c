import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cinetrack.audio import AudioBuffer
from cinetrack.segmenter import (
    ClipTooShortError,
    ConstantClassifier,
    EnergyClassifier,
    Interval,
    PassthroughSeparator,
    Segment,
    detect_nonsilent,
    extract_segments,
    music_gate,
    segments_to_json,
)
from conftest import concat, silence, sine


class TestInterval:
    def test_valid(self):
        assert Interval(1.0, 3.0).duration == pytest.approx(2.0)

    def test_rejects_reversed(self):
        with pytest.raises(ValueError):
            Interval(3.0, 1.0)

    def test_rejects_negative_start(self):
        with pytest.raises(ValueError):
            Interval(-1.0, 1.0)


class TestDetectNonsilent:
    def test_tone_flanked_by_silence(self):
        sr = 22050
        buf = concat(silence(1.0, sr), sine(440, 2.0, sr, amplitude=0.8), silence(1.0, sr))
        intervals = detect_nonsilent(buf)
        assert len(intervals) == 1
        assert intervals[0].start == pytest.approx(1.0, abs=0.02)
        assert intervals[0].end == pytest.approx(3.0, abs=0.02)

    def test_all_silent(self):
        assert detect_nonsilent(silence(2.0, 22050)) == []

    def test_all_loud_constant(self):
        buf = AudioBuffer(np.full(22050, 0.7), 22050)
        intervals = detect_nonsilent(buf)
        assert len(intervals) == 1
        assert intervals[0].start == 0.0
        assert intervals[0].end == pytest.approx(1.0, abs=0.02)

    def test_two_regions(self):
        sr = 22050
        buf = concat(
            sine(330, 1.5, sr, 0.9),
            silence(2.0, sr),
            sine(550, 1.5, sr, 0.9),
        )
        intervals = detect_nonsilent(buf)
        assert len(intervals) == 2
        assert intervals[0].start == pytest.approx(0.0, abs=0.02)
        assert intervals[0].end == pytest.approx(1.5, abs=0.02)
        assert intervals[1].start == pytest.approx(3.5, abs=0.02)

    @pytest.mark.parametrize("gain", [0.25, 0.5, 2.0, 4.0])
    def test_gain_invariance(self, gain):
        # power-of-two gains scale float energies exactly, so boundaries
        # must be bit-identical
        sr = 22050
        base = concat(silence(0.5, sr), sine(440, 1.0, sr, 0.2), silence(0.5, sr))
        scaled = AudioBuffer(base.samples * gain, sr)
        assert detect_nonsilent(base) == detect_nonsilent(scaled)

    def test_too_short_for_one_frame(self):
        buf = AudioBuffer(np.ones(100), 22050)  # < 20 ms
        assert detect_nonsilent(buf) == []

    def test_rejects_bad_weight(self):
        with pytest.raises(ValueError):
            detect_nonsilent(sine(440, 1.0, 22050), weight=1.5)


def brute_force_merge(intervals, min_len, max_gap):
    """Oracle: repeatedly merge any adjacent pair with a small gap, then filter."""
    spans = [(iv.start, iv.end) for iv in intervals]
    changed = True
    while changed:
        changed = False
        for i in range(len(spans) - 1):
            if spans[i + 1][0] - spans[i][1] <= max_gap:
                spans[i : i + 2] = [(spans[i][0], spans[i + 1][1])]
                changed = True
                break
    return [Interval(s, e) for s, e in spans if e - s > min_len]


class TestExtractSegments:
    def test_merge_then_keep(self):
        result = extract_segments([Interval(0.001, 4), Interval(4.5, 12)])
        assert len(result) == 1
        assert result[0].start == pytest.approx(0.001)
        assert result[0].end == pytest.approx(12)

    def test_large_gap_short_pieces(self):
        assert extract_segments([Interval(0.001, 8), Interval(10, 15)]) == []

    def test_empty(self):
        assert extract_segments([]) == []

    def test_exactly_min_len_dropped(self):
        # strictly-longer-than rule: a run of exactly min_len is dropped
        assert extract_segments([Interval(0.001, 10.001)]) == []

    def test_rejects_overlap(self):
        with pytest.raises(ValueError):
            extract_segments([Interval(0.001, 5), Interval(4, 9)])

    @given(
        st.lists(
            st.tuples(
                st.floats(min_value=0.001, max_value=50),
                st.floats(min_value=0.05, max_value=20),
            ),
            max_size=8,
        )
    )
    @settings(max_examples=200, deadline=None)
    def test_matches_brute_force(self, spans):
        intervals = []
        cursor = 0.0
        for offset, length in spans:
            start = cursor + offset
            intervals.append(Interval(start, start + length))
            cursor = start + length
        got = extract_segments(intervals, min_len=10, max_gap=1)
        expected = brute_force_merge(intervals, min_len=10, max_gap=1)
        assert [(iv.start, iv.end) for iv in got] == [
            (iv.start, iv.end) for iv in expected
        ]
        for iv in got:
            assert iv.duration > 10


class ScriptedClassifier:
    """Returns a fixed list of scores, one per window call."""

    def __init__(self, scores, window_seconds=1.0):
        self.scores = list(scores)
        self.window_seconds = window_seconds
        self.call = 0

    def score(self, window):
        value = self.scores[self.call % len(self.scores)]
        self.call += 1
        return value


class TestMusicGate:
    def test_constant_pass(self):
        ok, mean = music_gate(sine(440, 3.0, 8000), ConstantClassifier(0.5))
        assert ok is True
        assert mean == pytest.approx(0.5)

    def test_constant_fail(self):
        ok, mean = music_gate(sine(440, 3.0, 8000), ConstantClassifier(0.2))
        assert ok is False
        assert mean == pytest.approx(0.2)

    def test_strict_threshold_at_mean(self):
        # scores [0.1, 0.6, 0.2]: mean 0.3, strict > fails
        ok, mean = music_gate(sine(440, 3.0, 8000), ScriptedClassifier([0.1, 0.6, 0.2]))
        assert ok is False
        assert mean == pytest.approx(0.3)

    def test_too_short(self):
        with pytest.raises(ClipTooShortError):
            music_gate(sine(440, 0.5, 8000), ConstantClassifier(0.5))

    def test_monotone_in_scores(self, rng):
        clip = sine(440, 5.0, 8000)
        base_scores = rng.uniform(0, 0.8, size=5)
        ok_low, _ = music_gate(clip, ScriptedClassifier(base_scores))
        ok_high, _ = music_gate(clip, ScriptedClassifier(base_scores + 0.2))
        assert ok_high >= ok_low  # raising every score never flips pass -> fail

    def test_energy_classifier_scores_in_range(self):
        classifier = EnergyClassifier()
        assert classifier.score(sine(440, 1.0, 8000, 0.9)) == 1.0
        assert classifier.score(silence(1.0, 8000)) == 0.0


class TestSeparator:
    def test_passthrough(self):
        buf = sine(440, 1.0, 8000)
        assert PassthroughSeparator().separate(buf) is buf


def test_segments_to_json():
    payload = segments_to_json(
        "film1", [Segment(Interval(1.0, 12.0), 0.8), Segment(Interval(20.0, 31.0), None)]
    )
    assert payload == {
        "film_id": "film1",
        "segments": [
            {"start": 1.0, "end": 12.0, "music_prob": 0.8},
            {"start": 20.0, "end": 31.0, "music_prob": None},
        ],
    }
