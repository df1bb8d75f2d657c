"""Film-music dataset construction, video-adapter fine-tuning, and evaluation toolkit."""

from .audio import AudioBuffer, ChromaMatrix, FrameSeries
from .manifest import ClipRecord, Manifest, ReviewStatus
from .prompts import MoodLabel
from .segmenter import Interval, Segment

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer",
    "ChromaMatrix",
    "FrameSeries",
    "ClipRecord",
    "Manifest",
    "ReviewStatus",
    "MoodLabel",
    "Interval",
    "Segment",
    "__version__",
]
