"""Conditioning-signal encoders.

The production text and video encoders are external pretrained models; this
module provides the interface they plug into plus deterministic stand-ins: a
hashed-vocabulary text embedder and a seeded random video embedder, together
with a loader for precomputed per-clip video embeddings on disk.
"""

from __future__ import annotations

import json
import zlib
from pathlib import Path
from typing import Protocol

import numpy as np
import torch


class TextEncoder(Protocol):
    def encode(self, text: str) -> torch.Tensor: ...  # (T_t, m)


class VideoEncoder(Protocol):
    def encode(self, clip_id: str) -> torch.Tensor: ...  # (T_v, n)


class HashTextEncoder:
    """Fixed random embedding table over hashed word ids.

    Deterministic for a given (dim, table_size, seed); output shape matches a
    real text encoder (tokens x model dim).
    """

    def __init__(self, dim: int, table_size: int = 512, max_tokens: int = 16, seed: int = 0):
        self.dim = dim
        self.table_size = table_size
        self.max_tokens = max_tokens
        g = torch.Generator().manual_seed(seed)
        self.table = torch.randn(table_size, dim, generator=g)

    def encode(self, text: str) -> torch.Tensor:
        words = text.lower().split() or [""]
        ids = [zlib.crc32(w.encode()) % self.table_size for w in words[: self.max_tokens]]
        return self.table[torch.tensor(ids, dtype=torch.long)]


class StubVideoEncoder:
    """Seeded random embeddings keyed on the clip id; deterministic per clip."""

    def __init__(self, dim: int, n_tokens: int = 4, seed: int = 0):
        self.dim = dim
        self.n_tokens = n_tokens
        self.seed = seed

    def encode(self, clip_id: str) -> torch.Tensor:
        key = zlib.crc32(clip_id.encode()) ^ self.seed
        rng = np.random.default_rng(key)
        return torch.from_numpy(
            rng.standard_normal((self.n_tokens, self.dim)).astype(np.float32)
        )


class FileVideoEncoder:
    """Loads precomputed embeddings: <clip_id>.f32 raw float32 + <clip_id>.json shape."""

    def __init__(self, root):
        self.root = Path(root)

    def encode(self, clip_id: str) -> torch.Tensor:
        data_path = self.root / f"{clip_id}.f32"
        meta_path = self.root / f"{clip_id}.json"
        shape = json.loads(meta_path.read_text())["shape"]
        arr = np.frombuffer(data_path.read_bytes(), dtype=np.float32).reshape(shape).copy()
        if arr.ndim != 2:
            raise ValueError(f"video embedding for {clip_id} must be 2-D, got {shape}")
        return torch.from_numpy(arr)
