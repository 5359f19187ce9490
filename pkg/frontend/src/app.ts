// Game controller: one in-flight request at a time, state refreshed from the
// server after every action, view rebuilt from that state alone.

import { ApiClient, ApiError, sessionConfigFor } from "./client.js";
import type { AnswerValue, SessionState, StartOptions, TaskKind } from "./types.js";
import { buildPlayView, type PlayView } from "./view.js";
import { renderPlayView } from "./render.js";

export class GameController {
  private state: SessionState | null = null;
  private inFlight = false;
  private error: string | null = null;
  private listeners: Array<(view: PlayView) => void> = [];

  constructor(private readonly client: ApiClient) {}

  get view(): PlayView {
    return buildPlayView(this.state, this.inFlight, this.error);
  }

  onChange(listener: (view: PlayView) => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    const view = this.view;
    for (const listener of this.listeners) listener(view);
  }

  async startGame(task: TaskKind, options: StartOptions = {}): Promise<PlayView> {
    if (this.inFlight) return this.view;
    this.inFlight = true;
    this.error = null;
    this.emit();
    try {
      const created = await this.client.createSession(sessionConfigFor(task, options));
      this.state = await this.client.state(created.session_id);
    } catch (err) {
      this.state = null; // no stale board behind an error banner
      this.error = err instanceof Error ? err.message : String(err);
    } finally {
      this.inFlight = false;
      this.emit();
    }
    return this.view;
  }

  async submitAnswer(answer: AnswerValue): Promise<PlayView> {
    if (this.inFlight || this.state === null || this.state.done) {
      return this.view; // duplicate submissions suppressed client-side
    }
    const sessionId = this.state.session_id;
    this.inFlight = true;
    this.emit();
    try {
      await this.client.answer(sessionId, answer, this.state.turn_index);
      this.state = await this.client.state(sessionId);
      this.error = null;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // stale turn or finished game: re-sync with the server
        this.state = await this.client.state(sessionId);
        this.error = null;
      } else {
        this.error = err instanceof Error ? err.message : String(err);
      }
    } finally {
      this.inFlight = false;
      this.emit();
    }
    return this.view;
  }

  async reset(): Promise<PlayView> {
    if (this.state !== null) {
      await this.client.deleteSession(this.state.session_id);
    }
    this.state = null;
    this.error = null;
    this.emit();
    return this.view;
  }
}

export function mountApp(root: HTMLElement, baseUrl: string): GameController {
  const controller = new GameController(new ApiClient(baseUrl));
  controller.onChange((view) => {
    root.innerHTML = renderPlayView(view);
  });
  root.innerHTML = renderPlayView(controller.view);
  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const start = target.getAttribute("data-start");
    if (start === "guess-who" || start === "guess-number") {
      void controller.startGame(start);
      return;
    }
    const answer = target.getAttribute("data-answer");
    if (answer === "yes" || answer === "no" || answer === "cant_answer") {
      void controller.submitAnswer(answer);
      return;
    }
    const action = target.getAttribute("data-action");
    if (action === "new-game" || action === "retry") {
      void controller.reset();
    }
  });
  return controller;
}
