// Mock fetch capturing every request so tests can assert exact payloads.

import type { ClipView } from "../src/types.js";

export interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

type Handler = (url: string, init?: RequestInit) => { status: number; json: unknown } | null;

export class MockApi {
  calls: RecordedCall[] = [];
  private handlers: Handler[] = [];

  route(match: (url: string, method: string) => boolean, json: unknown, status = 200): void {
    this.handlers.push((url, init) =>
      match(url, (init?.method ?? "GET").toUpperCase()) ? { status, json } : null,
    );
  }

  fetch = async (url: string, init?: RequestInit): Promise<Response> => {
    const method = (init?.method ?? "GET").toUpperCase();
    this.calls.push({
      url,
      method,
      body: init?.body ? JSON.parse(init.body as string) : null,
    });
    for (const handler of this.handlers) {
      const hit = handler(url, init);
      if (hit) {
        return new Response(JSON.stringify(hit.json), {
          status: hit.status,
          headers: { "Content-Type": "application/json" },
        });
      }
    }
    return new Response(JSON.stringify({ detail: "no route" }), { status: 404 });
  };

  posts(): RecordedCall[] {
    return this.calls.filter((c) => c.method === "POST");
  }
}

export function clipView(id: string, overrides: Partial<ClipView> = {}): ClipView {
  return {
    clip_id: id,
    film_id: "film1",
    start_s: 0,
    end_s: 15,
    matched_track: "track1",
    match_distance: 0.1,
    review_status: "pending",
    mood: null,
    video_url: `/media/${id}.mp4`,
    clip_audio_url: `/media/${id}.wav`,
    track_audio_url: "/media/track1.wav",
    my_annotation: null,
    ...overrides,
  };
}
