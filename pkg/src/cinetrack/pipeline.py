"""End-to-end dataset construction: separate, segment, gate, match, export.

Films live in per-film directories under the input root:

    <input_root>/<film_id>/
        film.wav          mixed audio, or the music stem when no separator
                          is configured
        film.mp4          optional video, recorded by path only
        tracks/*.wav      candidate soundtracks

Build emits pending ClipRecords into the manifest and writes each clip's
music-stem slice next to it. Re-running skips films whose audio and
configuration are unchanged (content-hash keyed).
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from threading import Lock

from . import segmenter
from .audio import AudioBuffer, chroma, load_wav, peak_normalize, resample, save_wav, truncate
from .config import PipelineConfig
from .manifest import ClipRecord, Manifest, ReviewStatus
from .matcher import NoCandidateError, assign
from .prompts import StubCaptioner, EchoSummarizer, build_prompt, segment_captions, summarize_caption

log = logging.getLogger("cinetrack.pipeline")

VIDEO_EXTENSIONS = (".mp4", ".mkv", ".webm")


@dataclass
class BuildReport:
    films_processed: list[str] = field(default_factory=list)
    films_skipped: list[str] = field(default_factory=list)
    errors: dict[str, str] = field(default_factory=dict)
    clips_added: int = 0

    @property
    def ok(self) -> bool:
        return not self.errors


def make_classifier(spec: str) -> segmenter.MusicEventClassifier:
    """Build the configured gate classifier: "energy" or "constant:<p>"."""
    if spec == "energy":
        return segmenter.EnergyClassifier()
    if spec.startswith("constant:"):
        return segmenter.ConstantClassifier(float(spec.split(":", 1)[1]))
    raise ValueError(f"unknown classifier spec {spec!r}")


def make_separator(config: PipelineConfig) -> segmenter.SourceSeparator:
    if config.separator_command:
        return segmenter.CommandSeparator(config.separator_command)
    return segmenter.PassthroughSeparator()


def _film_audio_path(film_dir: Path) -> Path:
    for name in ("music.wav", "film.wav"):
        candidate = film_dir / name
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"{film_dir}: no film.wav or music.wav")


def _video_path(film_dir: Path) -> str | None:
    for ext in VIDEO_EXTENSIONS:
        candidate = film_dir / f"film{ext}"
        if candidate.exists():
            return str(candidate)
    return None


def _build_key(audio_path: Path, config: PipelineConfig) -> str:
    h = hashlib.sha256()
    h.update(audio_path.read_bytes())
    h.update(config.to_canonical_json().encode())
    return h.hexdigest()[:16]


def build_film(
    film_dir: Path,
    config: PipelineConfig,
    manifest: Manifest,
    lock: Lock,
    classifier: segmenter.MusicEventClassifier,
    separator: segmenter.SourceSeparator,
) -> int:
    """Run separate -> segment -> gate -> match for one film; returns clips added."""
    film_id = film_dir.name
    audio_path = _film_audio_path(film_dir)
    build_key = _build_key(audio_path, config)

    with lock:
        existing = manifest.by_film(film_id)
        if existing and all(r.build_key == build_key for r in existing):
            return -1  # unchanged; skip

    stem = separator.separate(load_wav(audio_path))
    intervals = segmenter.detect_nonsilent(stem, config.silence_weight)
    segments = segmenter.extract_segments(
        intervals, config.min_segment_seconds, config.max_gap_seconds
    )

    track_dir = film_dir / "tracks"
    track_paths = sorted(track_dir.glob("*.wav")) if track_dir.exists() else []
    track_chromas = {}
    track_files = {}
    for path in track_paths:
        buf = resample(load_wav(path), config.chroma_rate)
        track_chromas[path.stem] = chroma(buf, config.chroma_fft_size, config.chroma_hop)
        track_files[path.stem] = str(path)

    clips_dir = Path(config.output_root) / "clips"
    clips_dir.mkdir(parents=True, exist_ok=True)
    video = _video_path(film_dir)
    hop_seconds = config.chroma_hop / config.chroma_rate

    added = 0
    for index, interval in enumerate(segments):
        clip_id = f"{film_id}_{index:04d}"
        clip_audio = stem.slice_seconds(interval.start, interval.end)
        passed, prob = segmenter.music_gate(clip_audio, classifier, config.music_gate_threshold)
        if not passed:
            log.info("%s: gate rejected (p=%.3f)", clip_id, prob)
            continue

        matched = distance = offset_s = None
        if track_chromas:
            clip_chroma = chroma(
                resample(clip_audio, config.chroma_rate),
                config.chroma_fft_size,
                config.chroma_hop,
            )
            try:
                match = assign(clip_chroma, track_chromas)
                matched = match.track_id
                distance = match.distance
                offset_s = match.offset_frames * hop_seconds
            except NoCandidateError:
                log.warning("%s: no admissible soundtrack", clip_id)

        clip_path = clips_dir / f"{clip_id}.wav"
        save_wav(clip_path, clip_audio)
        record = ClipRecord(
            clip_id=clip_id,
            film_id=film_id,
            start_s=interval.start,
            end_s=interval.end,
            matched_track=matched,
            match_distance=distance,
            match_offset_s=offset_s,
            mean_music_prob=prob,
            video_path=video,
            clip_audio_path=str(clip_path),
            track_audio_path=track_files.get(matched),
            build_key=build_key,
        )
        with lock:
            manifest.upsert(record)
        added += 1
    return added


def build(config: PipelineConfig, max_workers: int = 4) -> BuildReport:
    """Build the manifest from every film directory under the input root."""
    input_root = Path(config.input_root)
    manifest_path = Path(config.manifest_path)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(manifest_path)
    lock = Lock()
    classifier = make_classifier(config.classifier)
    separator = make_separator(config)
    report = BuildReport()

    film_dirs = sorted(d for d in input_root.iterdir() if d.is_dir()) if input_root.exists() else []

    def run(film_dir: Path):
        return film_dir.name, build_film(film_dir, config, manifest, lock, classifier, separator)

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = [pool.submit(run, d) for d in film_dirs]
        for film_dir, future in zip(film_dirs, futures):
            try:
                film_id, added = future.result()
            except Exception as exc:
                # per-film failure: record and continue with the rest
                report.errors[film_dir.name] = str(exc)
                log.error("film %s failed: %s", film_dir.name, exc)
                continue
            if added < 0:
                report.films_skipped.append(film_id)
            else:
                report.films_processed.append(film_id)
                report.clips_added += added

    manifest.save()
    return report


@dataclass
class ExportReport:
    exported: list[str] = field(default_factory=list)
    skipped: dict[str, str] = field(default_factory=dict)


def export_training(config: PipelineConfig, out_dir) -> ExportReport:
    """Export finalized records as training pairs.

    Audio (the matched soundtrack) is resampled to the target rate,
    peak-normalized, and truncated to the clip length; the prompt is built
    from the record's mood and caption. Non-finalized records are skipped.
    """
    manifest = Manifest(config.manifest_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = ExportReport()
    captioner = StubCaptioner()
    summarizer = EchoSummarizer()

    entries = []
    for clip_id in sorted(manifest.records):
        record = manifest.records[clip_id]
        if record.review_status is not ReviewStatus.FINALIZED:
            report.skipped[clip_id] = record.review_status.value
            continue
        source = record.track_audio_path or record.clip_audio_path
        if not source or not Path(source).exists():
            report.skipped[clip_id] = "missing audio"
            log.warning("%s: missing audio, skipped", clip_id)
            continue

        # normalize after truncation, so the exported file itself peaks at 1.0
        buf = peak_normalize(
            truncate(resample(load_wav(source), config.target_sample_rate), config.clip_seconds)
        )
        wav_path = out / f"{clip_id}.wav"
        save_wav(wav_path, buf)

        caption = record.caption
        if not caption:
            if buf.duration >= 30.0:
                captions = segment_captions(buf, captioner)
                caption = summarize_caption(captions, summarizer)
            else:
                caption = "instrumental film music"
        prompt = record.prompt or build_prompt(record.mood, caption)
        record.caption = caption
        record.prompt = prompt
        entries.append(
            {
                "clip_id": clip_id,
                "audio": str(wav_path),
                "prompt": prompt,
                "video": record.video_path,
            }
        )
        report.exported.append(clip_id)

    with open(out / "training.jsonl", "w") as f:
        for entry in entries:
            f.write(json.dumps(entry) + "\n")
    manifest.save()  # prompts live in the manifest too
    return report
