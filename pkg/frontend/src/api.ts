/** Thin typed client for the annotation service. */

import type {
  JudgmentSubmission,
  Progress,
  SessionInfo,
  TaskView,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number | null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface AnnotationApi {
  session(): Promise<SessionInfo>;
  /** Next unanswered task for the annotator, or null when the session is done. */
  nextTask(annotatorId: string): Promise<TaskView | null>;
  submit(judgment: JudgmentSubmission): Promise<void>;
  progress(annotatorId: string): Promise<Progress>;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient implements AnnotationApi {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  /** base is the /api/v1 prefix; default works when the UI is served by the
   * annotation server itself. */
  constructor(base = "/api/v1", fetchImpl?: FetchLike) {
    this.base = base.replace(/\/$/, "");
    const impl = fetchImpl ?? (globalThis.fetch as FetchLike | undefined);
    if (!impl) {
      throw new Error("no fetch implementation available");
    }
    this.fetchImpl = fetchImpl ? fetchImpl : impl.bind(globalThis);
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.base + path, init);
    } catch (err) {
      throw new ApiError(`network failure: ${String(err)}`, null);
    }
    if (!response.ok && response.status !== 204) {
      let detail = "";
      try {
        detail = await response.text();
      } catch {
        // response body unavailable, status alone will have to do
      }
      throw new ApiError(
        `${path} failed with ${response.status}${detail ? `: ${detail}` : ""}`,
        response.status,
      );
    }
    return response;
  }

  async session(): Promise<SessionInfo> {
    const response = await this.request("/session");
    return (await response.json()) as SessionInfo;
  }

  async nextTask(annotatorId: string): Promise<TaskView | null> {
    const query = new URLSearchParams({ annotator: annotatorId });
    const response = await this.request(`/tasks/next?${query}`);
    if (response.status === 204) {
      return null;
    }
    return (await response.json()) as TaskView;
  }

  async submit(judgment: JudgmentSubmission): Promise<void> {
    await this.request("/judgments", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(judgment),
    });
  }

  async progress(annotatorId: string): Promise<Progress> {
    const query = new URLSearchParams({ annotator: annotatorId });
    const response = await this.request(`/progress?${query}`);
    return (await response.json()) as Progress;
  }
}
