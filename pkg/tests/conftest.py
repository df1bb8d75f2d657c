import numpy as np
import pytest

from cinetrack.audio import AudioBuffer


def sine(freq: float, seconds: float, sr: int, amplitude: float = 1.0) -> AudioBuffer:
    t = np.arange(int(round(seconds * sr))) / sr
    return AudioBuffer(amplitude * np.sin(2 * np.pi * freq * t), sr)


def silence(seconds: float, sr: int) -> AudioBuffer:
    return AudioBuffer(np.zeros(int(round(seconds * sr))), sr)


def concat(*bufs: AudioBuffer) -> AudioBuffer:
    rates = {b.sample_rate for b in bufs}
    assert len(rates) == 1
    return AudioBuffer(np.concatenate([b.samples for b in bufs]), rates.pop())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
