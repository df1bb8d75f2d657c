"""Human review service: mapping inspection and two-annotator mood labeling.

State machine per clip:

    pending --(either annotator rejects mapping)--> mapping_rejected  [terminal]
    pending --(both annotate, moods agree)-------> finalized
    pending --(both annotate, moods differ)------> annotated          [needs adjudication]
    annotated --(adjudication)-------------------> finalized

Annotations are appended to a write-ahead JSONL log before being applied;
on startup the review state of every logged clip is rebuilt by replay, so a
crash can never lose or corrupt accepted submissions. All mutations are
serialized through one lock; reads see consistent snapshots.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from threading import Lock

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .manifest import ClipRecord, InvalidTransitionError, Manifest, ReviewStatus
from .prompts import MoodLabel, mood_map


class UnknownClipError(KeyError):
    pass


class ConflictError(ValueError):
    """Submission collides with the clip's current review state."""


@dataclass
class AnnotationRecord:
    clip_id: str
    annotator_id: str
    mood: MoodLabel | None
    mapping_ok: bool
    timestamp: float

    def to_json(self) -> dict:
        return {
            "kind": "annotation",
            "clip_id": self.clip_id,
            "annotator_id": self.annotator_id,
            "mood": self.mood.value if self.mood else None,
            "mapping_ok": self.mapping_ok,
            "timestamp": self.timestamp,
        }


@dataclass
class AdjudicationRecord:
    clip_id: str
    final_mood: MoodLabel
    resolved_by: tuple[str, str]
    timestamp: float

    def to_json(self) -> dict:
        return {
            "kind": "adjudication",
            "clip_id": self.clip_id,
            "final_mood": self.final_mood.value,
            "resolved_by": list(self.resolved_by),
            "timestamp": self.timestamp,
        }


class ReviewService:
    """Annotation state over a manifest, persisted via a write-ahead log."""

    def __init__(self, manifest: Manifest, annotators: tuple[str, str], wal_path=None):
        if len(set(annotators)) != 2:
            raise ValueError("exactly two distinct annotator ids are required")
        self.manifest = manifest
        self.annotators = tuple(annotators)
        self.wal_path = Path(wal_path) if wal_path else None
        self.lock = Lock()
        # (clip_id, annotator_id) -> AnnotationRecord, latest wins
        self.annotations: dict[tuple[str, str], AnnotationRecord] = {}
        self.adjudications: dict[str, AdjudicationRecord] = {}
        if self.wal_path and self.wal_path.exists():
            self._replay()

    # -- persistence ---------------------------------------------------

    def _append_wal(self, event: dict) -> None:
        if self.wal_path is None:
            return
        with open(self.wal_path, "a") as f:
            f.write(json.dumps(event) + "\n")

    def _replay(self) -> None:
        events = []
        with open(self.wal_path) as f:
            for line in f:
                line = line.strip()
                if line:
                    events.append(json.loads(line))
        # review state of logged clips is derived from the log alone
        for clip_id in {e["clip_id"] for e in events}:
            record = self.manifest.get(clip_id)
            if record is not None:
                record.review_status = ReviewStatus.PENDING
                record.mood = None
        for event in events:
            try:
                if event["kind"] == "annotation":
                    self.submit_annotation(
                        event["clip_id"],
                        event["annotator_id"],
                        MoodLabel(event["mood"]) if event["mood"] else None,
                        event["mapping_ok"],
                        _log=False,
                    )
                elif event["kind"] == "adjudication":
                    self.submit_adjudication(
                        event["clip_id"], MoodLabel(event["final_mood"]), _log=False
                    )
            except (UnknownClipError, ConflictError, ValueError):
                continue  # stale event for a removed clip

    # -- queries --------------------------------------------------------

    def clip(self, clip_id: str) -> ClipRecord:
        record = self.manifest.get(clip_id)
        if record is None:
            raise UnknownClipError(clip_id)
        return record

    def queue_for(self, annotator_id: str) -> list[ClipRecord]:
        """Clips still awaiting this annotator's submission."""
        self._check_annotator(annotator_id)
        pending = []
        for clip_id in sorted(self.manifest.records):
            record = self.manifest.records[clip_id]
            if record.review_status is not ReviewStatus.PENDING:
                continue
            if (clip_id, annotator_id) not in self.annotations:
                pending.append(record)
        return pending

    def my_annotation(self, clip_id: str, annotator_id: str) -> AnnotationRecord | None:
        return self.annotations.get((clip_id, annotator_id))

    def both_annotations(self, clip_id: str) -> list[AnnotationRecord]:
        found = [
            self.annotations[(clip_id, a)]
            for a in self.annotators
            if (clip_id, a) in self.annotations
        ]
        return found if len(found) == 2 else []

    def needs_adjudication(self) -> list[str]:
        return sorted(
            r.clip_id
            for r in self.manifest.records.values()
            if r.review_status is ReviewStatus.ANNOTATED
        )

    def agreement_report(self) -> dict:
        """Mood agreement over clips both annotators labeled."""
        n_both = 0
        n_agree = 0
        disagreement = []
        for clip_id in sorted(self.manifest.records):
            pair = self.both_annotations(clip_id)
            if not pair or any(a.mood is None for a in pair):
                continue
            n_both += 1
            if pair[0].mood is pair[1].mood:
                n_agree += 1
            else:
                disagreement.append(clip_id)
        return {
            "n_both_annotated": n_both,
            "n_agree": n_agree,
            "rate": (n_agree / n_both) if n_both else None,
            "disagreement": disagreement,
            "needs_adjudication": self.needs_adjudication(),
        }

    # -- mutations -------------------------------------------------------

    def _check_annotator(self, annotator_id: str) -> None:
        if annotator_id not in self.annotators:
            raise ValueError(f"unknown annotator {annotator_id!r}")

    def submit_annotation(
        self,
        clip_id: str,
        annotator_id: str,
        mood: MoodLabel | None,
        mapping_ok: bool,
        _log: bool = True,
    ) -> ClipRecord:
        self._check_annotator(annotator_id)
        if mapping_ok and mood is None:
            raise ValueError("a mood label is required when the mapping is accepted")
        with self.lock:
            record = self.clip(clip_id)
            key = (clip_id, annotator_id)
            existing = self.annotations.get(key)
            if (
                existing is not None
                and existing.mood is mood
                and existing.mapping_ok == mapping_ok
            ):
                return record  # idempotent re-submission
            if record.review_status is not ReviewStatus.PENDING:
                raise ConflictError(
                    f"{clip_id} is {record.review_status.value}; annotations closed"
                )

            annotation = AnnotationRecord(clip_id, annotator_id, mood, mapping_ok, time.time())
            if _log:
                self._append_wal(annotation.to_json())
            self.annotations[key] = annotation

            if not mapping_ok:
                record.transition(ReviewStatus.MAPPING_REJECTED)
            else:
                pair = self.both_annotations(clip_id)
                if pair and all(a.mapping_ok for a in pair):
                    if pair[0].mood is pair[1].mood:
                        record.mood = pair[0].mood
                        record.transition(ReviewStatus.FINALIZED)
                    else:
                        record.transition(ReviewStatus.ANNOTATED)
            if _log:
                self.manifest.save()
            return record

    def submit_adjudication(
        self, clip_id: str, final_mood: MoodLabel, _log: bool = True
    ) -> ClipRecord:
        with self.lock:
            record = self.clip(clip_id)
            if record.review_status is not ReviewStatus.ANNOTATED:
                raise ConflictError(
                    f"{clip_id} is {record.review_status.value}, not awaiting adjudication"
                )
            adjudication = AdjudicationRecord(clip_id, final_mood, self.annotators, time.time())
            if _log:
                self._append_wal(adjudication.to_json())
            record.mood = final_mood
            record.transition(ReviewStatus.FINALIZED)
            self.adjudications[clip_id] = adjudication
            if _log:
                self.manifest.save()
            return record


# -- HTTP layer ----------------------------------------------------------


class AnnotationBody(BaseModel):
    annotator_id: str
    mood: MoodLabel | None = None
    mapping_ok: bool


class AdjudicationBody(BaseModel):
    final_mood: MoodLabel


def _clip_view(service: ReviewService, record: ClipRecord, annotator: str | None = None) -> dict:
    view = {
        "clip_id": record.clip_id,
        "film_id": record.film_id,
        "start_s": record.start_s,
        "end_s": record.end_s,
        "matched_track": record.matched_track,
        "match_distance": record.match_distance,
        "review_status": record.review_status.value,
        "mood": record.mood.value if record.mood else None,
        "video_url": f"/media/{record.video_path}" if record.video_path else None,
        "clip_audio_url": f"/media/{record.clip_audio_path}" if record.clip_audio_path else None,
        "track_audio_url": f"/media/{record.track_audio_path}" if record.track_audio_path else None,
    }
    if annotator:
        mine = service.my_annotation(record.clip_id, annotator)
        view["my_annotation"] = (
            {"mood": mine.mood.value if mine.mood else None, "mapping_ok": mine.mapping_ok}
            if mine
            else None
        )
    # the other annotator's label stays hidden until both have submitted
    pair = service.both_annotations(record.clip_id)
    if pair:
        view["annotations"] = [
            {
                "annotator_id": a.annotator_id,
                "mood": a.mood.value if a.mood else None,
                "mapping_ok": a.mapping_ok,
            }
            for a in pair
        ]
    return view


def _media_response(root: Path, rel_path: str, range_header: str | None) -> Response:
    target = (root / rel_path).resolve()
    if not target.is_relative_to(root.resolve()) or not target.is_file():
        raise HTTPException(status_code=404, detail="media not found")
    data = target.read_bytes()
    size = len(data)
    headers = {"Accept-Ranges": "bytes"}
    if range_header and range_header.startswith("bytes="):
        spec = range_header[len("bytes=") :].split(",")[0].strip()
        start_s, _, end_s = spec.partition("-")
        try:
            if start_s:
                start = int(start_s)
                end = int(end_s) if end_s else size - 1
            else:
                start = size - int(end_s)  # suffix form: last N bytes
                end = size - 1
        except ValueError:
            start, end = 0, size - 1
        start = max(0, start)
        end = min(end, size - 1)
        if start <= end:
            headers["Content-Range"] = f"bytes {start}-{end}/{size}"
            return Response(
                data[start : end + 1], status_code=206, headers=headers,
                media_type="application/octet-stream",
            )
    return Response(data, headers=headers, media_type="application/octet-stream")


def create_app(
    manifest_path,
    annotators: tuple[str, str],
    media_root=".",
    wal_path=None,
    static_dir=None,
) -> FastAPI:
    """Assemble the review application around one manifest."""
    manifest = Manifest(manifest_path)
    if wal_path is None:
        wal_path = Path(manifest_path).with_suffix(".annotations.jsonl")
    service = ReviewService(manifest, annotators, wal_path)
    media = Path(media_root)
    app = FastAPI(title="cinetrack review")
    app.state.service = service

    @app.exception_handler(UnknownClipError)
    async def unknown_clip(_req: Request, exc: UnknownClipError):
        return JSONResponse(status_code=404, content={"detail": f"unknown clip {exc.args[0]}"})

    @app.exception_handler(ConflictError)
    async def conflict(_req: Request, exc: ConflictError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def bad_request(_req: Request, exc: ValueError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/api/queue")
    def queue(annotator: str = Query(...)):
        records = service.queue_for(annotator)
        return {
            "annotator": annotator,
            "clips": [_clip_view(service, r, annotator) for r in records],
        }

    @app.get("/api/clips/{clip_id}")
    def clip(clip_id: str, annotator: str | None = None):
        return _clip_view(service, service.clip(clip_id), annotator)

    @app.post("/api/clips/{clip_id}/annotations")
    def annotate(clip_id: str, body: AnnotationBody):
        record = service.submit_annotation(clip_id, body.annotator_id, body.mood, body.mapping_ok)
        return _clip_view(service, record, body.annotator_id)

    @app.post("/api/clips/{clip_id}/adjudication")
    def adjudicate(clip_id: str, body: AdjudicationBody):
        record = service.submit_adjudication(clip_id, body.final_mood)
        return _clip_view(service, record)

    @app.get("/api/report")
    def report():
        return service.agreement_report()

    @app.get("/api/mood-map")
    def get_mood_map():
        return mood_map()

    @app.get("/media/{rel_path:path}")
    def media_file(rel_path: str, request: Request):
        return _media_response(media, rel_path, request.headers.get("range"))

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
