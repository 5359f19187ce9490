// Thin fetch wrapper over the session service. All game logic lives on the
// server; this file only moves JSON.

import type {
  AnswerResponse,
  AnswerValue,
  CreateSessionResponse,
  SessionState,
  StartOptions,
  TaskKind,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, detail);
}

export function sessionConfigFor(task: TaskKind, options: StartOptions = {}): Record<string, unknown> {
  return {
    environment: { kind: task.replace("-", "_") },
    t_max: options.tMax ?? 16,
    termination: { kind: "singleton" },
    feedback: { kind: options.feedback ?? "none" },
    seed: options.seed ?? Math.floor(Math.random() * 1_000_000),
  };
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async healthz(): Promise<boolean> {
    try {
      const response = await fetch(this.url("/healthz"));
      return response.ok;
    } catch {
      return false;
    }
  }

  async createSession(config: Record<string, unknown>): Promise<CreateSessionResponse> {
    const response = await fetch(this.url("/sessions"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ config }),
    });
    return parseOrThrow<CreateSessionResponse>(response);
  }

  async answer(sessionId: string, answer: AnswerValue, turn?: number): Promise<AnswerResponse> {
    const response = await fetch(this.url(`/sessions/${sessionId}/answer`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(turn === undefined ? { answer } : { answer, turn }),
    });
    return parseOrThrow<AnswerResponse>(response);
  }

  async state(sessionId: string): Promise<SessionState> {
    const response = await fetch(this.url(`/sessions/${sessionId}/state`));
    return parseOrThrow<SessionState>(response);
  }

  async deleteSession(sessionId: string): Promise<void> {
    await fetch(this.url(`/sessions/${sessionId}`), { method: "DELETE" });
  }
}
