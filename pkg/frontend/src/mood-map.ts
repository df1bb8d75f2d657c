// GENERATED from src/mood-map.json (cinetrack mood-map) — do not edit.
// Regenerate with: npm run genmoodmap
export const MOOD_MAP = {
  "happy": {
    "quadrant": "HVHA",
    "valence_high": true,
    "arousal_high": true,
    "key": 1
  },
  "sad": {
    "quadrant": "LVLA",
    "valence_high": false,
    "arousal_high": false,
    "key": 2
  },
  "nervous": {
    "quadrant": "LVHA",
    "valence_high": false,
    "arousal_high": true,
    "key": 3
  },
  "peaceful": {
    "quadrant": "HVLA",
    "valence_high": true,
    "arousal_high": false,
    "key": 4
  }
} as const;
