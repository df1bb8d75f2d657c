// Thin client over the review service; the only mutating calls are the two
// documented POSTs (annotations, adjudication).

import type {
  AdjudicationPayload,
  AnnotationPayload,
  ClipView,
  QueueResponse,
  Report,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && body.detail) detail = JSON.stringify(body.detail);
      } catch {
        // non-JSON error body
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  queue(annotator: string): Promise<QueueResponse> {
    return this.request(`/api/queue?annotator=${encodeURIComponent(annotator)}`);
  }

  clip(clipId: string, annotator?: string): Promise<ClipView> {
    const suffix = annotator ? `?annotator=${encodeURIComponent(annotator)}` : "";
    return this.request(`/api/clips/${encodeURIComponent(clipId)}${suffix}`);
  }

  submitAnnotation(clipId: string, payload: AnnotationPayload): Promise<ClipView> {
    return this.request(`/api/clips/${encodeURIComponent(clipId)}/annotations`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  submitAdjudication(clipId: string, payload: AdjudicationPayload): Promise<ClipView> {
    return this.request(`/api/clips/${encodeURIComponent(clipId)}/adjudication`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  report(): Promise<Report> {
    return this.request("/api/report");
  }
}
