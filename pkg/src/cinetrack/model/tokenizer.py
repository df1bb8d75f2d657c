"""Deterministic scalar audio tokenizer.

Stands in for a neural codec at toy scale: audio is downsampled to 1 kHz,
mu-law companded, and quantized to 256 levels. The mapping is fixed and
invertible up to quantization error, which keeps the decoder's token space
codec-agnostic.
"""

from __future__ import annotations

import numpy as np
import torch

from ..audio import AudioBuffer, resample

TOKEN_LEVELS = 256
TOKEN_RATE = 1000


def mulaw_tokenize(
    buf: AudioBuffer, levels: int = TOKEN_LEVELS, rate: int = TOKEN_RATE
) -> torch.Tensor:
    """Audio -> int64 token ids in [0, levels)."""
    if levels < 2:
        raise ValueError("levels must be >= 2")
    x = resample(buf, rate).samples
    x = np.clip(x, -1.0, 1.0)
    mu = levels - 1
    y = np.sign(x) * np.log1p(mu * np.abs(x)) / np.log1p(mu)
    ids = np.floor((y + 1.0) / 2.0 * levels).astype(np.int64)
    return torch.from_numpy(np.clip(ids, 0, levels - 1))


def mulaw_detokenize(
    tokens: torch.Tensor, levels: int = TOKEN_LEVELS, rate: int = TOKEN_RATE
) -> AudioBuffer:
    """Token ids -> audio at the tokenizer rate (level-center reconstruction)."""
    ids = tokens.detach().cpu().numpy().astype(np.float64)
    y = (ids + 0.5) / levels * 2.0 - 1.0
    mu = levels - 1
    x = np.sign(y) * ((1.0 + mu) ** np.abs(y) - 1.0) / mu
    return AudioBuffer(np.clip(x, -1.0, 1.0), rate)
