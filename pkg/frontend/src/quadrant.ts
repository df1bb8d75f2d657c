// The valence/arousal quadrant picker's only source of truth is the table
// generated from the backend package (see scripts/genmoodmap.mjs); keyboard
// slots, quadrant positions, and labels are all derived from it here.

import { MOOD_MAP } from "./mood-map.js";
import type { AnnotationPayload, Mood } from "./types.js";

export interface QuadrantEntry {
  mood: Mood;
  quadrant: string;
  valenceHigh: boolean;
  arousalHigh: boolean;
  key: number; // keyboard slot 1-4
}

export const QUADRANT_ENTRIES: QuadrantEntry[] = Object.entries(MOOD_MAP)
  .map(([mood, info]) => ({
    mood: mood as Mood,
    quadrant: info.quadrant,
    valenceHigh: info.valence_high,
    arousalHigh: info.arousal_high,
    key: info.key,
  }))
  .sort((a, b) => a.key - b.key);

export function moodForKey(key: number): Mood | null {
  const entry = QUADRANT_ENTRIES.find((e) => e.key === key);
  return entry ? entry.mood : null;
}

export function moodForQuadrant(valenceHigh: boolean, arousalHigh: boolean): Mood {
  const entry = QUADRANT_ENTRIES.find(
    (e) => e.valenceHigh === valenceHigh && e.arousalHigh === arousalHigh,
  );
  if (!entry) {
    throw new Error(`no mood for quadrant valence=${valenceHigh} arousal=${arousalHigh}`);
  }
  return entry.mood;
}

// Accept + quadrant pick, or reject (mood deliberately absent on reject).
export function annotationPayload(
  annotatorId: string,
  mappingOk: boolean,
  mood: Mood | null,
): AnnotationPayload {
  if (mappingOk && mood === null) {
    throw new Error("accepting the mapping requires a mood");
  }
  return {
    annotator_id: annotatorId,
    mood: mappingOk ? mood : null,
    mapping_ok: mappingOk,
  };
}
