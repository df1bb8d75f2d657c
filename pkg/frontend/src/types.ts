// Wire types for the review service JSON API.

export type Mood = "happy" | "sad" | "nervous" | "peaceful";

export type ReviewStatus = "pending" | "mapping_rejected" | "annotated" | "finalized";

export interface AnnotationView {
  annotator_id: string;
  mood: Mood | null;
  mapping_ok: boolean;
}

export interface ClipView {
  clip_id: string;
  film_id: string;
  start_s: number;
  end_s: number;
  matched_track: string | null;
  match_distance: number | null;
  review_status: ReviewStatus;
  mood: Mood | null;
  video_url: string | null;
  clip_audio_url: string | null;
  track_audio_url: string | null;
  my_annotation?: AnnotationView | null;
  annotations?: AnnotationView[];
}

export interface QueueResponse {
  annotator: string;
  clips: ClipView[];
}

export interface Report {
  n_both_annotated: number;
  n_agree: number;
  rate: number | null;
  disagreement: string[];
  needs_adjudication: string[];
}

export interface AnnotationPayload {
  annotator_id: string;
  mood: Mood | null;
  mapping_ok: boolean;
}

export interface AdjudicationPayload {
  final_mood: Mood;
}
