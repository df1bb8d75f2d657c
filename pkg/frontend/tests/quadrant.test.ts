import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { MOOD_MAP } from "../src/mood-map.js";
import {
  QUADRANT_ENTRIES,
  annotationPayload,
  moodForKey,
  moodForQuadrant,
} from "../src/quadrant.js";

describe("shared mood table", () => {
  it("the generated TS module equals the exported JSON byte-for-byte", () => {
    const json = JSON.parse(readFileSync(new URL("../src/mood-map.json", import.meta.url), "utf8"));
    expect(MOOD_MAP).toEqual(json);
  });

  it("covers the four moods with keyboard slots 1-4", () => {
    expect(QUADRANT_ENTRIES.map((e) => e.key)).toEqual([1, 2, 3, 4]);
    expect(new Set(QUADRANT_ENTRIES.map((e) => e.mood))).toEqual(
      new Set(["happy", "sad", "nervous", "peaceful"]),
    );
  });

  it("is a bijection over the quadrant flags", () => {
    const seen = new Set<string>();
    for (const v of [true, false]) {
      for (const a of [true, false]) {
        seen.add(moodForQuadrant(v, a));
      }
    }
    expect(seen.size).toBe(4);
    expect(moodForQuadrant(true, true)).toBe("happy");
    expect(moodForQuadrant(false, false)).toBe("sad");
    expect(moodForQuadrant(false, true)).toBe("nervous");
    expect(moodForQuadrant(true, false)).toBe("peaceful");
  });

  it("maps keys 1-4 through the table, not a hand copy", () => {
    for (const entry of QUADRANT_ENTRIES) {
      expect(moodForKey(entry.key)).toBe(entry.mood);
      expect(MOOD_MAP[entry.mood].key).toBe(entry.key);
    }
    expect(moodForKey(5)).toBeNull();
  });
});

describe("annotationPayload", () => {
  it("accept carries the mood", () => {
    expect(annotationPayload("alice", true, "happy")).toEqual({
      annotator_id: "alice",
      mood: "happy",
      mapping_ok: true,
    });
  });

  it("reject never carries a mood", () => {
    expect(annotationPayload("alice", false, "happy")).toEqual({
      annotator_id: "alice",
      mood: null,
      mapping_ok: false,
    });
  });

  it("accept without a mood is a programming error", () => {
    expect(() => annotationPayload("alice", true, null)).toThrow(/requires a mood/);
  });
});
