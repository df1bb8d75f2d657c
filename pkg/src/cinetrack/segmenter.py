"""Musical segment identification: silence detection plus music-event gating.

A film's music stem is scanned for non-silent regions with a relative energy
threshold, nearby regions are merged, short ones dropped, and the survivors
are gated by a pluggable music-event classifier.
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np

from .audio import AudioBuffer, frame, load_wav, rms_energy, save_wav

SILENCE_FRAME_MS = 20.0
SILENCE_HOP_MS = 20.0
DEFAULT_SILENCE_WEIGHT = 0.2
DEFAULT_MIN_LEN = 10.0
DEFAULT_MAX_GAP = 1.0
DEFAULT_GATE_THRESHOLD = 0.3

ENERGY_HISTOGRAM_BINS = 64


class ClipTooShortError(ValueError):
    """Clip is shorter than one classifier window."""


@dataclass(frozen=True)
class Interval:
    """Half-open time span [start, end) in seconds."""

    start: float
    end: float

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"need 0 <= start < end, got [{self.start}, {self.end})")

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class Segment:
    """A musical region, optionally carrying its gate score."""

    interval: Interval
    mean_music_prob: float | None = None

    def __post_init__(self):
        p = self.mean_music_prob
        if p is not None and not (0.0 <= p <= 1.0):
            raise ValueError(f"mean_music_prob must be in [0, 1], got {p}")


@runtime_checkable
class MusicEventClassifier(Protocol):
    """Scores an audio window with a probability that it contains music.

    Implementations must be deterministic for a fixed input. The real system
    plugs in a pretrained event detector; tests use stubs.
    """

    window_seconds: float

    def score(self, window: AudioBuffer) -> float: ...


class ConstantClassifier:
    """Stub returning a fixed probability for every window."""

    def __init__(self, prob: float, window_seconds: float = 1.0):
        if not (0.0 <= prob <= 1.0):
            raise ValueError(f"prob must be in [0, 1], got {prob}")
        self.prob = prob
        self.window_seconds = window_seconds

    def score(self, window: AudioBuffer) -> float:
        return self.prob


class EnergyClassifier:
    """Deterministic heuristic: maps window RMS onto [0, 1].

    Stands in for a pretrained event detector in CLI runs; saturates at
    ``full_scale_rms`` so any reasonably loud window scores 1.0.
    """

    def __init__(self, window_seconds: float = 1.0, full_scale_rms: float = 0.05):
        self.window_seconds = window_seconds
        self.full_scale_rms = full_scale_rms

    def score(self, window: AudioBuffer) -> float:
        rms = float(np.sqrt(np.mean(window.samples**2)))
        return min(1.0, rms / self.full_scale_rms)


class SourceSeparator(Protocol):
    """Splits mixed film audio into a music stem (other stems discarded here)."""

    def separate(self, buf: AudioBuffer) -> AudioBuffer: ...


class PassthroughSeparator:
    """Stub separator: input already is the music stem."""

    def separate(self, buf: AudioBuffer) -> AudioBuffer:
        return buf


class CommandSeparator:
    """Shells out to a user-configured separator command.

    The command is given the input WAV path and an output WAV path for the
    music stem via ``{input}`` / ``{output}`` placeholders.
    """

    def __init__(self, command_template: str):
        self.command_template = command_template

    def separate(self, buf: AudioBuffer) -> AudioBuffer:
        with tempfile.TemporaryDirectory(prefix="cinetrack-sep-") as tmp:
            inp = Path(tmp) / "input.wav"
            out = Path(tmp) / "music.wav"
            save_wav(inp, buf)
            cmd = self.command_template.format(input=inp, output=out)
            subprocess.run(shlex.split(cmd), check=True)
            return load_wav(out)


def _energy_threshold(energies: np.ndarray, weight: float) -> float:
    """Relative threshold between the two dominant modes of the energy histogram.

    Falls back to the 10th/90th percentiles when the histogram is unimodal.
    Derived from the signal's own statistics, so it is invariant under
    uniform gain changes.
    """
    hist, edges = np.histogram(energies, bins=ENERGY_HISTOGRAM_BINS)
    centers = (edges[:-1] + edges[1:]) / 2.0

    maxima = []
    for i in range(len(hist)):
        if hist[i] == 0:
            continue
        left_ok = i == 0 or hist[i] > hist[i - 1]
        right_ok = i == len(hist) - 1 or hist[i] >= hist[i + 1]
        if left_ok and right_ok:
            maxima.append(i)

    if len(maxima) >= 2:
        top_two = sorted(maxima, key=lambda i: hist[i], reverse=True)[:2]
        e_low, e_high = sorted(centers[i] for i in top_two)
    else:
        e_low, e_high = np.percentile(energies, [10, 90])
    return e_low + weight * (e_high - e_low)


def detect_nonsilent(buf: AudioBuffer, weight: float = DEFAULT_SILENCE_WEIGHT) -> list[Interval]:
    """Frame-aligned intervals whose 20 ms RMS energy clears the relative threshold."""
    if len(buf) == 0:
        raise ValueError("empty buffer")
    if not (0.0 < weight < 1.0):
        raise ValueError(f"weight must be in (0, 1), got {weight}")

    series = frame(buf, SILENCE_FRAME_MS, SILENCE_HOP_MS)
    if len(series) == 0:
        return []
    energies = rms_energy(series)
    if energies.max() <= 0.0:
        return []

    threshold = _energy_threshold(energies, weight)
    active = energies >= threshold

    hop_s = series.hop_seconds
    intervals: list[Interval] = []
    run_start = None
    for i, on in enumerate(active):
        if on and run_start is None:
            run_start = i
        elif not on and run_start is not None:
            intervals.append(Interval(run_start * hop_s, i * hop_s))
            run_start = None
    if run_start is not None:
        intervals.append(Interval(run_start * hop_s, len(active) * hop_s))
    return intervals


def extract_segments(
    intervals: list[Interval],
    min_len: float = DEFAULT_MIN_LEN,
    max_gap: float = DEFAULT_MAX_GAP,
) -> list[Interval]:
    """Merge intervals separated by gaps <= max_gap, keep merged runs strictly longer than min_len."""
    for a, b in zip(intervals, intervals[1:]):
        if b.start < a.end:
            raise ValueError(f"intervals must be sorted and non-overlapping: {a} then {b}")

    merged: list[Interval] = []
    for iv in intervals:
        if merged and iv.start - merged[-1].end <= max_gap:
            merged[-1] = Interval(merged[-1].start, iv.end)
        else:
            merged.append(iv)
    return [iv for iv in merged if iv.duration > min_len]


def music_gate(
    clip: AudioBuffer,
    classifier: MusicEventClassifier,
    threshold: float = DEFAULT_GATE_THRESHOLD,
) -> tuple[bool, float]:
    """Score consecutive windows; pass iff the mean score strictly exceeds threshold."""
    window_s = classifier.window_seconds
    win = int(round(window_s * clip.sample_rate))
    n_windows = len(clip) // win if win > 0 else 0
    if n_windows == 0:
        raise ClipTooShortError(
            f"clip of {clip.duration:.3f}s is shorter than one {window_s}s window"
        )
    scores = []
    for i in range(n_windows):
        window = AudioBuffer(clip.samples[i * win : (i + 1) * win], clip.sample_rate)
        scores.append(classifier.score(window))
    mean = float(np.mean(scores))
    return mean > threshold, mean


def segments_to_json(film_id: str, segments: list[Segment]) -> dict:
    """Serializable form: {"film_id": ..., "segments": [{start, end, music_prob}]}."""
    return {
        "film_id": film_id,
        "segments": [
            {
                "start": seg.interval.start,
                "end": seg.interval.end,
                "music_prob": seg.mean_music_prob,
            }
            for seg in segments
        ],
    }
