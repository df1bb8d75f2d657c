"""The dataset manifest: one ClipRecord per movie clip, stored as JSONL.

The manifest is the single source of truth across pipeline stages. Records
are keyed by clip_id; re-running a stage upserts rather than duplicates.

Review lifecycle: pending -> mapping_rejected (terminal) or
pending -> finalized (both annotators agree) or
pending -> annotated (they disagree; awaiting adjudication) -> finalized.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path

from .prompts import MoodLabel
from .segmenter import Interval


class ReviewStatus(str, Enum):
    PENDING = "pending"
    MAPPING_REJECTED = "mapping_rejected"
    ANNOTATED = "annotated"  # both annotated, moods disagree: needs adjudication
    FINALIZED = "finalized"


# legal state transitions; identity transitions are always allowed
_TRANSITIONS = {
    ReviewStatus.PENDING: {
        ReviewStatus.MAPPING_REJECTED,
        ReviewStatus.ANNOTATED,
        ReviewStatus.FINALIZED,
    },
    ReviewStatus.ANNOTATED: {ReviewStatus.FINALIZED},
    ReviewStatus.MAPPING_REJECTED: set(),
    ReviewStatus.FINALIZED: set(),
}


class InvalidTransitionError(ValueError):
    """Attempted review-status change outside the allowed lifecycle."""


@dataclass
class ClipRecord:
    clip_id: str
    film_id: str
    start_s: float
    end_s: float
    matched_track: str | None = None
    match_distance: float | None = None
    match_offset_s: float | None = None
    mean_music_prob: float | None = None
    mood: MoodLabel | None = None
    caption: str | None = None
    prompt: str | None = None
    review_status: ReviewStatus = ReviewStatus.PENDING
    video_path: str | None = None
    clip_audio_path: str | None = None
    track_audio_path: str | None = None
    build_key: str | None = None

    def __post_init__(self):
        if isinstance(self.mood, str):
            self.mood = MoodLabel(self.mood)
        if isinstance(self.review_status, str):
            self.review_status = ReviewStatus(self.review_status)
        if self.review_status is ReviewStatus.FINALIZED:
            if self.mood is None or self.matched_track is None:
                raise ValueError(
                    f"{self.clip_id}: finalized records need a mood and a matched track"
                )

    @property
    def interval(self) -> Interval:
        return Interval(self.start_s, self.end_s)

    def transition(self, new_status: ReviewStatus) -> None:
        if new_status is self.review_status:
            return
        if new_status not in _TRANSITIONS[self.review_status]:
            raise InvalidTransitionError(
                f"{self.clip_id}: {self.review_status.value} -> {new_status.value}"
            )
        self.review_status = new_status

    def to_json(self) -> dict:
        data = asdict(self)
        data["mood"] = self.mood.value if self.mood else None
        data["review_status"] = self.review_status.value
        return data

    @classmethod
    def from_json(cls, data: dict) -> "ClipRecord":
        return cls(**data)


class Manifest:
    """JSONL-backed collection of ClipRecords with atomic rewrites."""

    def __init__(self, path):
        self.path = Path(path)
        self.records: dict[str, ClipRecord] = {}
        if self.path.exists():
            with open(self.path) as f:
                for line in f:
                    line = line.strip()
                    if not line:
                        continue
                    record = ClipRecord.from_json(json.loads(line))
                    self.records[record.clip_id] = record

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, clip_id: str) -> bool:
        return clip_id in self.records

    def get(self, clip_id: str) -> ClipRecord | None:
        return self.records.get(clip_id)

    def upsert(self, record: ClipRecord) -> None:
        self.records[record.clip_id] = record

    def by_film(self, film_id: str) -> list[ClipRecord]:
        return [r for r in self.records.values() if r.film_id == film_id]

    def by_status(self, status: ReviewStatus) -> list[ClipRecord]:
        return [r for r in self.records.values() if r.review_status is status]

    def save(self) -> None:
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        with open(tmp, "w") as f:
            for clip_id in sorted(self.records):
                f.write(json.dumps(self.records[clip_id].to_json()) + "\n")
        os.replace(tmp, self.path)
