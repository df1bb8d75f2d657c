"""Clip-to-soundtrack assignment by minimum sliding chroma distance.

A clip's chroma is slid along each candidate track's chroma; the per-offset
cost is the mean Euclidean distance between aligned unit-norm columns.
Silent (all-zero) columns score 0 against silence and sqrt(2) against any
unit column, so silence never matches active music cheaply.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .audio import ChromaMatrix


class ClipTooLongError(ValueError):
    """Clip has more chroma frames than the track."""


class NoCandidateError(LookupError):
    """No track is long enough to admit the clip."""


@dataclass(frozen=True)
class MatchResult:
    track_id: str
    distance: float
    offset_frames: int

    def __post_init__(self):
        if self.distance < 0:
            raise ValueError("distance must be non-negative")
        if self.offset_frames < 0:
            raise ValueError("offset_frames must be non-negative")


def chroma_distance(clip: ChromaMatrix, track: ChromaMatrix) -> tuple[float, int]:
    """Minimum over offsets of the mean column distance, with its argmin offset.

    Ties break toward the smallest offset.
    """
    t_clip, t_track = clip.n_frames, track.n_frames
    if t_clip > t_track:
        raise ClipTooLongError(f"clip has {t_clip} frames, track only {t_track}")
    if t_clip == 0:
        raise ValueError("clip chroma is empty")

    # column_dist[i, j] = || clip[:, i] - track[:, j] ||
    column_dist = cdist(clip.values.T, track.values.T)
    n_offsets = t_track - t_clip + 1
    rows = np.arange(t_clip)
    costs = np.empty(n_offsets)
    for o in range(n_offsets):
        costs[o] = column_dist[rows, rows + o].mean()
    best = int(np.argmin(costs))  # first minimum wins ties
    return float(costs[best]), best


def assign(clip_chroma: ChromaMatrix, tracks: dict[str, ChromaMatrix]) -> MatchResult:
    """Best-matching track over all admissible candidates.

    Tracks shorter than the clip are skipped; distance ties break by the
    insertion order of ``tracks``.
    """
    best: MatchResult | None = None
    for track_id, track in tracks.items():
        if clip_chroma.n_frames > track.n_frames:
            continue
        distance, offset = chroma_distance(clip_chroma, track)
        if best is None or distance < best.distance:
            best = MatchResult(track_id, distance, offset)
    if best is None:
        raise NoCandidateError("no track is long enough for this clip")
    return best
