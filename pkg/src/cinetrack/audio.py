"""Foundational audio types and deterministic DSP primitives.

Everything downstream (silence detection, matching, export) is built on the
mono AudioBuffer and the pure functions in this module. All operations are
side-effect free and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

PITCH_CLASSES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")

# chroma accumulation band: sub-bass and ultra-highs carry no matching signal
CHROMA_FMIN = 55.0
CHROMA_FMAX = 8000.0

# default chroma analysis parameters (~93 ms frames at 22.05 kHz)
CHROMA_RATE = 22050
CHROMA_FFT_SIZE = 4096
CHROMA_HOP = 2048


class SilentAudioError(ValueError):
    """Raised when an operation cannot proceed on all-zero audio."""


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio: sample array in nominal [-1, 1] plus its sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"AudioBuffer is mono; got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("AudioBuffer samples must be finite")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def slice_seconds(self, start: float, end: float) -> "AudioBuffer":
        """Samples covering [start, end) seconds, clamped to the buffer."""
        i = max(0, int(round(start * self.sample_rate)))
        j = min(len(self.samples), int(round(end * self.sample_rate)))
        return AudioBuffer(self.samples[i:j], self.sample_rate)


@dataclass(frozen=True)
class FrameSeries:
    """Fixed-length analysis windows cut from one buffer."""

    frames: np.ndarray  # (n_frames, frame_len)
    frame_len_ms: float
    hop_ms: float
    origin_rate: int

    def __post_init__(self):
        if self.frame_len_ms <= 0 or self.hop_ms <= 0:
            raise ValueError("frame_len_ms and hop_ms must be positive")
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2:
            raise ValueError(f"frames must be 2-D, got shape {frames.shape}")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def hop_seconds(self) -> float:
        return self.hop_ms / 1000.0


@dataclass(frozen=True)
class ChromaMatrix:
    """12 x T pitch-class energy, columns unit L2 norm (or all-zero when silent)."""

    values: np.ndarray  # (12, T)
    frame_times: np.ndarray  # (T,) seconds, frame centers

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        times = np.asarray(self.frame_times, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != 12:
            raise ValueError(f"chroma must be 12 x T, got shape {values.shape}")
        if times.shape != (values.shape[1],):
            raise ValueError("frame_times length must match column count")
        if np.any(values < 0):
            raise ValueError("chroma values must be non-negative")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "frame_times", times)

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]


def resample(buf: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Band-limited (polyphase) resample preserving duration within one sample."""
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    if target_rate == buf.sample_rate:
        return buf
    ratio = Fraction(target_rate, buf.sample_rate)
    out = resample_poly(buf.samples, ratio.numerator, ratio.denominator)
    return AudioBuffer(out, target_rate)


def peak_normalize(buf: AudioBuffer) -> AudioBuffer:
    """Uniformly scale so max |sample| == 1.0 exactly."""
    if len(buf) == 0:
        raise ValueError("cannot normalize an empty buffer")
    peak = np.max(np.abs(buf.samples))
    if peak == 0.0:
        raise SilentAudioError("cannot peak-normalize silent audio")
    return AudioBuffer(buf.samples / peak, buf.sample_rate)


def truncate(buf: AudioBuffer, seconds: float) -> AudioBuffer:
    """Keep at most the first ``seconds`` of audio."""
    if seconds <= 0:
        raise ValueError(f"seconds must be positive, got {seconds}")
    n = int(seconds * buf.sample_rate)
    if n >= len(buf):
        return buf
    return AudioBuffer(buf.samples[:n], buf.sample_rate)


def frame(buf: AudioBuffer, frame_len_ms: float, hop_ms: float) -> FrameSeries:
    """Cut into fixed windows; trailing partial frame is dropped.

    Frame count is floor((N - L) / H) + 1 for N samples, frame length L and
    hop H in samples (0 when the buffer is shorter than one frame).
    """
    if frame_len_ms <= 0 or hop_ms <= 0:
        raise ValueError("frame_len_ms and hop_ms must be positive")
    L = int(round(frame_len_ms * buf.sample_rate / 1000.0))
    H = int(round(hop_ms * buf.sample_rate / 1000.0))
    if L <= 0 or H <= 0:
        raise ValueError("frame/hop shorter than one sample at this rate")
    N = len(buf)
    if N < L:
        frames = np.empty((0, L))
    else:
        n_frames = (N - L) // H + 1
        idx = np.arange(L)[None, :] + H * np.arange(n_frames)[:, None]
        frames = buf.samples[idx]
    return FrameSeries(frames, frame_len_ms, hop_ms, buf.sample_rate)


def rms_energy(frames: FrameSeries) -> np.ndarray:
    """Per-frame root-mean-square energy, sqrt(mean(x^2))."""
    if len(frames) == 0:
        raise ValueError("empty frame series")
    return np.sqrt(np.mean(frames.frames**2, axis=1))


def _bin_pitch_classes(sr: int, fft_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Map rfft bins in the chroma band to pitch classes (0 = C)."""
    freqs = np.fft.rfftfreq(fft_size, 1.0 / sr)
    mask = (freqs >= CHROMA_FMIN) & (freqs <= min(CHROMA_FMAX, sr / 2.0))
    semitones = np.rint(12.0 * np.log2(freqs[mask] / 440.0)).astype(int)
    classes = (semitones + 9) % 12  # A440 is pitch class 9, C is 0
    return np.flatnonzero(mask), classes


def chroma(
    buf: AudioBuffer,
    fft_size: int = CHROMA_FFT_SIZE,
    hop: int = CHROMA_HOP,
) -> ChromaMatrix:
    """STFT magnitude energy folded into 12 pitch classes per frame.

    Each column is L2-normalized; digitally silent frames stay all-zero.
    Only bins between 55 Hz and 8 kHz contribute.
    """
    if fft_size <= 0 or (fft_size & (fft_size - 1)) != 0:
        raise ValueError(f"fft_size must be a power of two, got {fft_size}")
    if hop <= 0:
        raise ValueError(f"hop must be positive, got {hop}")

    N = len(buf)
    if N < fft_size:
        n_frames = 0
    else:
        n_frames = (N - fft_size) // hop + 1
    values = np.zeros((12, n_frames))
    times = (np.arange(n_frames) * hop + fft_size / 2.0) / buf.sample_rate
    if n_frames == 0:
        return ChromaMatrix(values, times)

    idx = np.arange(fft_size)[None, :] + hop * np.arange(n_frames)[:, None]
    window = np.hanning(fft_size)
    spectra = np.abs(np.fft.rfft(buf.samples[idx] * window, axis=1))

    bins, classes = _bin_pitch_classes(buf.sample_rate, fft_size)
    for pc in range(12):
        sel = bins[classes == pc]
        if len(sel):
            values[pc] = spectra[:, sel].sum(axis=1)

    norms = np.linalg.norm(values, axis=0)
    nonzero = norms > 0
    values[:, nonzero] /= norms[nonzero]
    return ChromaMatrix(values, times)


def load_wav(path) -> AudioBuffer:
    """Read a WAV file (PCM 16/24/32-bit or float32); downmix to mono by averaging."""
    sr, data = wavfile.read(path)
    data = np.asarray(data)
    if data.ndim == 2:
        data = data.mean(axis=1)
    if data.dtype == np.int16:
        samples = data / 32768.0
    elif data.dtype == np.int32:
        # 24-bit PCM arrives left-aligned in int32, so one scale covers both
        samples = data / 2147483648.0
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    else:
        samples = data.astype(np.float64)
    return AudioBuffer(samples, int(sr))


def save_wav(path, buf: AudioBuffer) -> None:
    """Write float32 WAV."""
    wavfile.write(path, buf.sample_rate, buf.samples.astype(np.float32))
