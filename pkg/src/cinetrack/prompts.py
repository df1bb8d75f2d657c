"""Text prompt construction: mood taxonomy, caption segmentation and
summarization through pluggable clients, and the final template.

The template is fixed: "A film soundtrack for a <mood> scene. <caption>."
Genre is deliberately never part of it; genre keywords dominate generation
and wreck scenes whose mood contradicts them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Protocol

from .audio import AudioBuffer

SUMMARY_INSTRUCTION = (
    "Summarize the description of each song in one sentence from 0 to 30 seconds."
)
QUALITY_EXCLUSION_CLAUSE = "Exclude any mention of audio quality."

CAPTION_SEGMENT_SECONDS = 10.0
CAPTION_SEGMENTS = 3
CLIENT_TIMEOUT_SECONDS = 30.0
CLIENT_RETRIES = 3


class MoodLabel(str, Enum):
    """Four-quadrant valence/arousal mood taxonomy."""

    HAPPY = "happy"  # high valence, high arousal
    SAD = "sad"  # low valence, low arousal
    NERVOUS = "nervous"  # low valence, high arousal
    PEACEFUL = "peaceful"  # high valence, low arousal

    @property
    def quadrant(self) -> str:
        return _MOOD_TO_QUADRANT[self]

    @property
    def valence_high(self) -> bool:
        return self in (MoodLabel.HAPPY, MoodLabel.PEACEFUL)

    @property
    def arousal_high(self) -> bool:
        return self in (MoodLabel.HAPPY, MoodLabel.NERVOUS)


_MOOD_TO_QUADRANT = {
    MoodLabel.HAPPY: "HVHA",
    MoodLabel.SAD: "LVLA",
    MoodLabel.NERVOUS: "LVHA",
    MoodLabel.PEACEFUL: "HVLA",
}


def mood_from_quadrant(valence_high: bool, arousal_high: bool) -> MoodLabel:
    """(valence, arousal) -> mood: (T,T) happy, (F,F) sad, (F,T) nervous, (T,F) peaceful."""
    if valence_high:
        return MoodLabel.HAPPY if arousal_high else MoodLabel.PEACEFUL
    return MoodLabel.NERVOUS if arousal_high else MoodLabel.SAD


def mood_map() -> dict:
    """Canonical quadrant/mood bijection for export to other components.

    Keyboard slots 1-4 follow the enum declaration order.
    """
    entries = {}
    for slot, mood in enumerate(MoodLabel, start=1):
        entries[mood.value] = {
            "quadrant": mood.quadrant,
            "valence_high": mood.valence_high,
            "arousal_high": mood.arousal_high,
            "key": slot,
        }
    return entries


class CaptionerClient(Protocol):
    """Describes a piece of audio in natural language."""

    def caption(self, audio: AudioBuffer) -> str: ...


class SummarizerClient(Protocol):
    """Condenses several captions into one sentence, following an instruction."""

    def summarize(self, instruction: str, captions: list[str]) -> str: ...


@dataclass
class StubCaptioner:
    """Deterministic captioner for tests: applies a function of the audio."""

    fn: Callable[[AudioBuffer], str] = field(
        default=lambda audio: f"audio of {audio.duration:.1f}s"
    )
    calls: list[float] = field(default_factory=list)

    def caption(self, audio: AudioBuffer) -> str:
        self.calls.append(audio.duration)
        return self.fn(audio)


@dataclass
class EchoSummarizer:
    """Stub summarizer: joins captions; records every instruction it was sent."""

    instructions: list[str] = field(default_factory=list)
    fail_times: int = 0  # raise on the first N calls, for retry tests

    def summarize(self, instruction: str, captions: list[str]) -> str:
        self.instructions.append(instruction)
        if self.fail_times > 0:
            self.fail_times -= 1
            raise RuntimeError("summarizer unavailable")
        return " ".join(captions)


class HttpSummarizer:
    """POSTs {"instruction", "captions"} to a configured endpoint.

    The API key is read from the named environment variable at call time and
    sent as a bearer token; it never appears in configuration files.
    """

    def __init__(self, endpoint: str, api_key_env: str = "", timeout: float = CLIENT_TIMEOUT_SECONDS):
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.timeout = timeout

    def summarize(self, instruction: str, captions: list[str]) -> str:
        import os

        import httpx

        headers = {}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env)
            if not key:
                raise RuntimeError(f"environment variable {self.api_key_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        response = httpx.post(
            self.endpoint,
            json={"instruction": instruction, "captions": captions},
            headers=headers,
            timeout=self.timeout,
        )
        response.raise_for_status()
        return response.json()["summary"]


def segment_captions(track30s: AudioBuffer, captioner: CaptionerClient) -> list[str]:
    """Caption the clip's [0,10), [10,20), [20,30) second windows, in order.

    Input must cover at least 30 s; anything beyond 30 s is ignored.
    """
    needed = CAPTION_SEGMENTS * CAPTION_SEGMENT_SECONDS
    if track30s.duration < needed:
        raise ValueError(
            f"need at least {needed:.0f}s of audio, got {track30s.duration:.2f}s; "
            "pad or skip upstream"
        )
    captions = []
    for i in range(CAPTION_SEGMENTS):
        window = track30s.slice_seconds(
            i * CAPTION_SEGMENT_SECONDS, (i + 1) * CAPTION_SEGMENT_SECONDS
        )
        captions.append(captioner.caption(window))
    return captions


def summarize_caption(
    captions: list[str],
    summarizer: SummarizerClient,
    exclude_quality: bool = False,
    retries: int = CLIENT_RETRIES,
    backoff_seconds: float = 0.5,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """Send the fixed instruction (plus the quality-exclusion clause for
    source-separated material) and return the client's one-sentence summary.

    Client failures retry up to ``retries`` attempts with exponential backoff.
    """
    if len(captions) != CAPTION_SEGMENTS:
        raise ValueError(f"expected {CAPTION_SEGMENTS} captions, got {len(captions)}")
    instruction = SUMMARY_INSTRUCTION
    if exclude_quality:
        instruction = f"{SUMMARY_INSTRUCTION} {QUALITY_EXCLUSION_CLAUSE}"

    last_error: Exception | None = None
    for attempt in range(retries):
        try:
            return summarizer.summarize(instruction, list(captions))
        except Exception as exc:  # client errors are opaque; retry uniformly
            last_error = exc
            if attempt < retries - 1:
                sleep(backoff_seconds * 2**attempt)
    raise RuntimeError(f"summarizer failed after {retries} attempts") from last_error


def build_prompt(mood: MoodLabel, caption: str) -> str:
    """Instantiate the fixed template with normalized caption punctuation."""
    normalized = caption.strip().rstrip(".").strip()
    if not normalized:
        raise ValueError("caption must be non-empty")
    return f"A film soundtrack for a {mood.value} scene. {normalized}."
