"""Pipeline configuration: thresholds, chroma parameters, paths, and clients.

Loadable from TOML or JSON; every threshold has the documented default and a
CLI override. API keys are never stored here, only environment variable
names.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .audio import CHROMA_FFT_SIZE, CHROMA_HOP, CHROMA_RATE


@dataclass
class PipelineConfig:
    input_root: str = "input"
    output_root: str = "output"
    manifest_path: str = "output/manifest.jsonl"

    silence_weight: float = 0.2
    music_gate_threshold: float = 0.3
    min_segment_seconds: float = 10.0
    max_gap_seconds: float = 1.0

    chroma_rate: int = CHROMA_RATE
    chroma_fft_size: int = CHROMA_FFT_SIZE
    chroma_hop: int = CHROMA_HOP

    target_sample_rate: int = 32000
    clip_seconds: float = 30.0

    separator_command: str | None = None  # None = input already is the music stem
    classifier: str = "energy"  # "energy" or "constant:<p>"
    summarizer_endpoint: str | None = None
    summarizer_key_env: str = "CINETRACK_SUMMARIZER_KEY"

    video_embedding_dim: int = 8
    video_embedding_root: str | None = None  # precomputed embeddings; None = stub

    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.silence_weight < 1.0):
            raise ValueError(f"silence_weight must be in (0, 1), got {self.silence_weight}")
        if not (0.0 <= self.music_gate_threshold <= 1.0):
            raise ValueError("music_gate_threshold must be in [0, 1]")
        if self.min_segment_seconds <= 0 or self.max_gap_seconds < 0:
            raise ValueError("segment thresholds must be positive")
        if self.target_sample_rate <= 0 or self.clip_seconds <= 0:
            raise ValueError("export parameters must be positive")

    def to_canonical_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if path.suffix == ".toml":
        with open(path, "rb") as f:
            data = tomllib.load(f)
    elif path.suffix == ".json":
        data = json.loads(path.read_text())
    else:
        raise ValueError(f"config must be .toml or .json, got {path.name}")
    return PipelineConfig(**data)
