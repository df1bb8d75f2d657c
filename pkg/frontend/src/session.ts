// Flow state for the two annotation tasks, kept free of DOM concerns so the
// payload contract is testable against a mocked API.

import { ApiClient, ApiError } from "./api.js";
import { annotationPayload, moodForKey } from "./quadrant.js";
import type { ClipView, Mood, Report } from "./types.js";

export interface Selection {
  mappingOk: boolean | null; // null until the annotator decides
  mood: Mood | null;
}

export class ReviewSession {
  clips: ClipView[] = [];
  index = 0;
  selection: Selection = { mappingOk: null, mood: null };
  lastError: string | null = null;
  submitted = 0;

  constructor(
    private api: ApiClient,
    readonly annotatorId: string,
  ) {}

  async load(): Promise<void> {
    const queue = await this.api.queue(this.annotatorId);
    this.clips = queue.clips;
    this.index = 0;
    this.resetSelection();
  }

  current(): ClipView | null {
    return this.index < this.clips.length ? this.clips[this.index] : null;
  }

  get done(): boolean {
    return this.current() === null;
  }

  resetSelection(): void {
    this.selection = { mappingOk: null, mood: null };
    this.lastError = null;
  }

  acceptMapping(): void {
    this.selection.mappingOk = true;
  }

  rejectMapping(): void {
    // rejected clips need no mood; the picker is disabled
    this.selection = { mappingOk: false, mood: null };
  }

  get moodPickerEnabled(): boolean {
    return this.selection.mappingOk !== false;
  }

  selectQuadrant(mood: Mood): void {
    if (!this.moodPickerEnabled) return;
    this.selection.mood = mood;
    if (this.selection.mappingOk === null) this.selection.mappingOk = true;
  }

  // Keyboard shortcuts must produce exactly the state clicks produce:
  // 1-4 pick a quadrant, A accepts the mapping, R rejects it.
  pressKey(key: string): void {
    if (key >= "1" && key <= "4") {
      const mood = moodForKey(Number(key));
      if (mood) this.selectQuadrant(mood);
    } else if (key.toLowerCase() === "a") {
      this.acceptMapping();
    } else if (key.toLowerCase() === "r") {
      this.rejectMapping();
    }
  }

  get canSubmit(): boolean {
    if (this.selection.mappingOk === false) return true;
    return this.selection.mappingOk === true && this.selection.mood !== null;
  }

  async submit(): Promise<boolean> {
    const clip = this.current();
    if (!clip || !this.canSubmit) return false;
    const payload = annotationPayload(
      this.annotatorId,
      this.selection.mappingOk as boolean,
      this.selection.mood,
    );
    try {
      await this.api.submitAnnotation(clip.clip_id, payload);
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        // someone else closed this clip; refresh the queue
        await this.load();
        this.lastError = "Clip state changed elsewhere; queue refreshed.";
        return false;
      }
      this.lastError = error instanceof Error ? error.message : String(error);
      return false;
    }
    this.submitted += 1;
    this.index += 1;
    this.resetSelection();
    return true;
  }

  completionReport(): Promise<Report> {
    return this.api.report();
  }
}

export class AdjudicationSession {
  clips: ClipView[] = [];
  index = 0;
  lastError: string | null = null;

  constructor(private api: ApiClient) {}

  async load(): Promise<void> {
    const report = await this.api.report();
    const clips = [];
    for (const clipId of report.needs_adjudication) {
      clips.push(await this.api.clip(clipId));
    }
    this.clips = clips;
    this.index = 0;
    this.lastError = null;
  }

  current(): ClipView | null {
    return this.index < this.clips.length ? this.clips[this.index] : null;
  }

  get empty(): boolean {
    return this.clips.length === 0;
  }

  async submit(finalMood: Mood): Promise<boolean> {
    const clip = this.current();
    if (!clip) return false;
    try {
      await this.api.submitAdjudication(clip.clip_id, { final_mood: finalMood });
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        // stale view on an already-finalized clip: reload the list
        await this.load();
        this.lastError = "Clip was already finalized; list reloaded.";
        return false;
      }
      this.lastError = error instanceof Error ? error.message : String(error);
      return false;
    }
    this.index += 1;
    return true;
  }
}
