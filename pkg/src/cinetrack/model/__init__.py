"""Toy-scale autoregressive music decoder with a trainable video branch."""

from .attention import (
    AdapterWeights,
    BaseAttentionWeights,
    LoraDelta,
    base_cross_attention,
    lora_effective,
    project_video,
    video_adapter_attention,
)
from .decoder import DecoderConfig, ToyMusicDecoder, trainable_parameters
from .training import EarlyStopper, TrainConfig, WarmupCosine, split_dataset, train

__all__ = [
    "AdapterWeights",
    "BaseAttentionWeights",
    "LoraDelta",
    "base_cross_attention",
    "lora_effective",
    "project_video",
    "video_adapter_attention",
    "DecoderConfig",
    "ToyMusicDecoder",
    "trainable_parameters",
    "EarlyStopper",
    "TrainConfig",
    "WarmupCosine",
    "split_dataset",
    "train",
]
