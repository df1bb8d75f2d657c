// DOM wiring: renders the review and adjudication flows on top of the
// DOM-free session state. All markup lives here; index.html is just a shell.

import { ApiClient } from "./api.js";
import { QUADRANT_ENTRIES } from "./quadrant.js";
import { AdjudicationSession, ReviewSession } from "./session.js";
import type { ClipView, Mood } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function mediaBlock(clip: ClipView): HTMLElement {
  const wrap = el("div", "media");
  if (clip.video_url) {
    const video = el("video", "clip-video");
    video.src = clip.video_url;
    video.controls = true;
    wrap.appendChild(video);
  }
  const players = el("div", "players");
  const sources: Array<[string, string | null]> = [
    ["Clip audio (A)", clip.clip_audio_url],
    ["Matched soundtrack (B)", clip.track_audio_url],
  ];
  for (const [label, url] of sources) {
    if (!url) continue;
    const box = el("div", "player");
    box.appendChild(el("span", "player-label", label));
    const audio = el("audio");
    audio.src = url;
    audio.controls = true;
    audio.preload = "none";
    box.appendChild(audio);
    players.appendChild(box);
  }
  wrap.appendChild(players);
  return wrap;
}

function quadrantGrid(
  selected: Mood | null,
  enabled: boolean,
  onPick: (mood: Mood) => void,
): HTMLElement {
  const grid = el("div", "quadrants");
  // columns: valence low -> high; rows: arousal high -> low
  const ordered = [...QUADRANT_ENTRIES].sort((a, b) => {
    const row = Number(b.arousalHigh) - Number(a.arousalHigh);
    return row !== 0 ? row : Number(a.valenceHigh) - Number(b.valenceHigh);
  });
  for (const entry of ordered) {
    const button = el("button", "quadrant", `${entry.key}. ${entry.mood}`);
    button.appendChild(el("small", "quadrant-code", entry.quadrant));
    button.disabled = !enabled;
    if (selected === entry.mood) button.classList.add("selected");
    button.addEventListener("click", () => onPick(entry.mood));
    grid.appendChild(button);
  }
  return grid;
}

export class App {
  private api: ApiClient;
  private review: ReviewSession | null = null;
  private adjudication: AdjudicationSession;
  private tab: "review" | "adjudication" = "review";
  private root: HTMLElement;

  constructor(root: HTMLElement, api = new ApiClient()) {
    this.root = root;
    this.api = api;
    this.adjudication = new AdjudicationSession(api);
    document.addEventListener("keydown", (event) => this.onKey(event));
  }

  start(): void {
    this.renderLogin();
  }

  private onKey(event: KeyboardEvent): void {
    if (this.tab !== "review" || !this.review || this.review.done) return;
    if (event.target instanceof HTMLInputElement) return;
    if (event.key === "Enter") {
      void this.submitReview();
      return;
    }
    this.review.pressKey(event.key);
    this.renderReview();
  }

  private renderLogin(): void {
    this.root.replaceChildren();
    const card = el("div", "card");
    card.appendChild(el("h1", undefined, "Clip review"));
    card.appendChild(el("p", undefined, "Enter your annotator id to load your queue."));
    const input = el("input");
    input.placeholder = "annotator id";
    const button = el("button", "primary", "Start");
    button.addEventListener("click", () => {
      if (input.value.trim()) void this.login(input.value.trim());
    });
    card.append(input, button);
    this.root.appendChild(card);
  }

  private async login(annotatorId: string): Promise<void> {
    this.review = new ReviewSession(this.api, annotatorId);
    try {
      await this.review.load();
    } catch (error) {
      this.review = null;
      this.renderError(String(error));
      return;
    }
    await this.adjudication.load();
    this.renderReview();
  }

  private renderError(message: string): void {
    this.root.replaceChildren();
    const card = el("div", "card error");
    card.appendChild(el("p", undefined, message));
    const retry = el("button", "primary", "Retry");
    retry.addEventListener("click", () => this.renderLogin());
    card.appendChild(retry);
    this.root.appendChild(card);
  }

  private tabs(): HTMLElement {
    const bar = el("nav", "tabs");
    const review = el("button", this.tab === "review" ? "tab active" : "tab", "Review");
    review.addEventListener("click", () => {
      this.tab = "review";
      this.renderReview();
    });
    bar.appendChild(review);
    if (!this.adjudication.empty) {
      const adj = el(
        "button",
        this.tab === "adjudication" ? "tab active" : "tab",
        `Adjudication (${this.adjudication.clips.length})`,
      );
      adj.addEventListener("click", () => {
        this.tab = "adjudication";
        this.renderAdjudication();
      });
      bar.appendChild(adj);
    }
    return bar;
  }

  private async submitReview(): Promise<void> {
    if (!this.review) return;
    await this.review.submit();
    if (this.review.done) {
      await this.renderCompletion();
    } else {
      this.renderReview();
    }
  }

  private renderReview(): void {
    if (!this.review) return;
    this.tab = "review";
    const session = this.review;
    const clip = session.current();
    this.root.replaceChildren(this.tabs());
    if (!clip) {
      void this.renderCompletion();
      return;
    }

    const card = el("div", "card");
    card.appendChild(
      el("h2", undefined, `${clip.clip_id} (${session.index + 1}/${session.clips.length})`),
    );
    card.appendChild(
      el(
        "p",
        "meta",
        `${clip.film_id} · ${clip.start_s.toFixed(1)}s – ${clip.end_s.toFixed(1)}s · ` +
          `matched: ${clip.matched_track ?? "none"}`,
      ),
    );
    card.appendChild(mediaBlock(clip));

    const mapping = el("div", "mapping");
    const accept = el(
      "button",
      session.selection.mappingOk === true ? "accept selected" : "accept",
      "Accept mapping (A)",
    );
    accept.addEventListener("click", () => {
      session.acceptMapping();
      this.renderReview();
    });
    const reject = el(
      "button",
      session.selection.mappingOk === false ? "reject selected" : "reject",
      "Reject mapping (R)",
    );
    reject.addEventListener("click", () => {
      session.rejectMapping();
      this.renderReview();
    });
    mapping.append(accept, reject);
    card.appendChild(mapping);

    card.appendChild(el("p", "hint", "Mood (1–4): how does the scene feel?"));
    card.appendChild(
      quadrantGrid(session.selection.mood, session.moodPickerEnabled, (mood) => {
        session.selectQuadrant(mood);
        this.renderReview();
      }),
    );

    const submit = el("button", "primary", "Submit (Enter)");
    submit.disabled = !session.canSubmit;
    submit.addEventListener("click", () => void this.submitReview());
    card.appendChild(submit);

    if (session.lastError) card.appendChild(el("p", "error-line", session.lastError));
    this.root.appendChild(card);
  }

  private async renderCompletion(): Promise<void> {
    if (!this.review) return;
    const report = await this.review.completionReport();
    await this.adjudication.load();
    this.root.replaceChildren(this.tabs());
    const card = el("div", "card");
    card.appendChild(el("h2", undefined, "Queue complete"));
    card.appendChild(
      el("p", undefined, `You submitted ${this.review.submitted} annotation(s).`),
    );
    const rate =
      report.rate === null ? "n/a (no doubly-annotated clips yet)" : report.rate.toFixed(3);
    card.appendChild(
      el(
        "p",
        undefined,
        `Agreement: ${report.n_agree}/${report.n_both_annotated} (rate ${rate}).`,
      ),
    );
    if (report.needs_adjudication.length) {
      card.appendChild(
        el(
          "p",
          undefined,
          `${report.needs_adjudication.length} clip(s) await adjudication.`,
        ),
      );
    }
    this.root.appendChild(card);
  }

  private renderAdjudication(): void {
    this.root.replaceChildren(this.tabs());
    const clip = this.adjudication.current();
    const card = el("div", "card");
    if (!clip) {
      card.appendChild(el("p", undefined, "No disagreements to resolve."));
      this.root.appendChild(card);
      return;
    }
    card.appendChild(el("h2", undefined, `Adjudicate ${clip.clip_id}`));
    const labels = el("div", "prior-labels");
    for (const annotation of clip.annotations ?? []) {
      labels.appendChild(
        el("span", "label-chip", `${annotation.annotator_id}: ${annotation.mood}`),
      );
    }
    card.appendChild(labels);
    card.appendChild(mediaBlock(clip));
    card.appendChild(el("p", "hint", "Consensus mood:"));
    card.appendChild(
      quadrantGrid(null, true, (mood) => {
        void this.adjudication.submit(mood).then(() => this.renderAdjudication());
      }),
    );
    if (this.adjudication.lastError) {
      card.appendChild(el("p", "error-line", this.adjudication.lastError));
    }
    this.root.appendChild(card);
  }
}
