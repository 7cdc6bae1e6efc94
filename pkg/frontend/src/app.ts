/** Annotation session state machine.
 *
 * One task at a time: fetch, render, submit, advance. The server is the
 * only source of task state, so a reload resumes wherever /tasks/next
 * says; nothing but the annotator id lives on the client.
 *
 * Submission is single-flight: once a choice is made the controls are
 * dead until the server acknowledges. A failed submit keeps the judgment
 * and retries with doubling backoff behind a visible banner; the task
 * never advances past an unacknowledged judgment.
 */

import type { AnnotationApi } from "./api.js";
import {
  renderCompletion,
  renderProgress,
  renderTask,
} from "./render.js";
import {
  CANNOT_DETERMINE,
  KIND_LEXICAL_SELECTION,
  KIND_RULE_VERIFICATION,
  KIND_VARIATION_PRECISION,
  KIND_VARIATION_RECALL,
  VERDICT_CORRECT,
  VERDICT_INCORRECT,
} from "./types.js";
import type {
  JudgmentSubmission,
  Progress,
  SelectionPayload,
  TaskView,
} from "./types.js";

export type AppState =
  | "loading"
  | "task"
  | "submitting"
  | "retrying"
  | "done"
  | "error";

export interface AppOptions {
  /** First retry delay after a failed submit; doubles per attempt. */
  retryBaseMs?: number;
  /** Backoff ceiling. */
  retryCapMs?: number;
}

export class App {
  state: AppState = "loading";
  currentTask: TaskView | null = null;

  private readonly root: HTMLElement;
  private readonly api: AnnotationApi;
  private readonly annotatorId: string;
  private readonly retryBaseMs: number;
  private readonly retryCapMs: number;

  private progressView: Progress | null = null;
  private pending: JudgmentSubmission | null = null;
  private retryAttempts = 0;
  private waiters: Array<(state: AppState) => void> = [];

  constructor(
    root: HTMLElement,
    api: AnnotationApi,
    annotatorId: string,
    options: AppOptions = {},
  ) {
    this.root = root;
    this.api = api;
    this.annotatorId = annotatorId;
    this.retryBaseMs = options.retryBaseMs ?? 1000;
    this.retryCapMs = options.retryCapMs ?? 16000;
  }

  /** Resolves with the new state at the next state transition. */
  nextChange(): Promise<AppState> {
    return new Promise((resolve) => {
      this.waiters.push(resolve);
    });
  }

  private setState(state: AppState): void {
    this.state = state;
    const waiters = this.waiters;
    this.waiters = [];
    for (const resolve of waiters) {
      resolve(state);
    }
  }

  async start(): Promise<void> {
    try {
      await this.api.session();
      this.progressView = await this.api.progress(this.annotatorId);
    } catch (err) {
      this.renderError(String(err));
      this.setState("error");
      return;
    }
    await this.advance();
  }

  private async advance(): Promise<void> {
    let task: TaskView | null;
    try {
      task = await this.api.nextTask(this.annotatorId);
    } catch (err) {
      this.renderError(String(err));
      this.setState("error");
      return;
    }
    this.currentTask = task;
    if (task === null) {
      this.renderFrame(null);
      this.setState("done");
      return;
    }
    this.renderFrame(task);
    this.setState("task");
  }

  /** Positional choice: candidate index for selection tasks, verdict index
   * (0 = correct, 1 = incorrect) for verification tasks. Out-of-range
   * presses are ignored rather than erroring, so stray keys are harmless. */
  choose(index: number): void {
    if (this.state !== "task" || this.currentTask === null) {
      return;
    }
    const task = this.currentTask;
    if (task.kind === KIND_LEXICAL_SELECTION) {
      const payload = task.payload as SelectionPayload;
      if (index < 0 || index >= payload.candidates.length) {
        return;
      }
      void this.submitValue(payload.candidates[index]);
      return;
    }
    if (
      task.kind === KIND_RULE_VERIFICATION ||
      task.kind === KIND_VARIATION_PRECISION
    ) {
      if (index === 0) {
        void this.submitValue(VERDICT_CORRECT);
      } else if (index === 1) {
        void this.submitValue(VERDICT_INCORRECT);
      }
    }
  }

  chooseCannotDetermine(): void {
    if (
      this.state !== "task" ||
      this.currentTask === null ||
      this.currentTask.kind !== KIND_LEXICAL_SELECTION
    ) {
      return;
    }
    void this.submitValue(CANNOT_DETERMINE);
  }

  /** Submit the free-text answer of a recall task; empty means "none". */
  submitRecall(text: string): void {
    if (
      this.state !== "task" ||
      this.currentTask === null ||
      this.currentTask.kind !== KIND_VARIATION_RECALL
    ) {
      return;
    }
    const cleaned = text.trim();
    void this.submitValue(cleaned === "" ? "none" : cleaned);
  }

  private async submitValue(value: string): Promise<void> {
    if (this.state !== "task" || this.currentTask === null) {
      return;
    }
    this.pending = {
      task_id: this.currentTask.id,
      annotator_id: this.annotatorId,
      value,
    };
    this.retryAttempts = 0;
    this.setControlsEnabled(false);
    this.setState("submitting");
    await this.trySubmit();
  }

  private async trySubmit(): Promise<void> {
    if (this.pending === null) {
      return;
    }
    try {
      await this.api.submit(this.pending);
    } catch {
      this.retryAttempts += 1;
      this.showBanner(true);
      this.setState("retrying");
      const delay = Math.min(
        this.retryBaseMs * 2 ** (this.retryAttempts - 1),
        this.retryCapMs,
      );
      setTimeout(() => {
        void this.trySubmit();
      }, delay);
      return;
    }
    this.pending = null;
    this.showBanner(false);
    try {
      this.progressView = await this.api.progress(this.annotatorId);
    } catch {
      // stale progress is cosmetic; the next ack refreshes it
    }
    await this.advance();
  }

  private renderFrame(task: TaskView | null): void {
    const doc = this.root.ownerDocument;
    this.root.textContent = "";

    const header = doc.createElement("header");
    const title = doc.createElement("span");
    title.className = "annotator-id";
    title.textContent = this.annotatorId;
    header.appendChild(title);
    if (this.progressView !== null) {
      header.appendChild(renderProgress(doc, this.progressView));
    }
    this.root.appendChild(header);

    const banner = doc.createElement("div");
    banner.id = "retry-banner";
    banner.textContent = "Submission failed. Retrying, your answer is kept.";
    banner.hidden = true;
    this.root.appendChild(banner);

    const main = doc.createElement("main");
    if (task === null) {
      const total = this.progressView ? this.progressView.total : 0;
      main.appendChild(renderCompletion(doc, total));
    } else {
      main.dataset.taskId = task.id;
      main.appendChild(renderTask(doc, task));
      this.attachClickHandlers(main, task);
    }
    this.root.appendChild(main);
    if (task !== null && task.kind === KIND_VARIATION_RECALL) {
      main.querySelector<HTMLInputElement>("input.missing-input")?.focus();
    }
  }

  private attachClickHandlers(main: HTMLElement, task: TaskView): void {
    if (task.kind === KIND_LEXICAL_SELECTION) {
      main.querySelectorAll<HTMLElement>("li.candidate").forEach((item, i) => {
        item.addEventListener("click", () => this.choose(i));
      });
      const escape = main.querySelector<HTMLElement>(".cannot-determine");
      escape?.addEventListener("click", () => this.chooseCannotDetermine());
      return;
    }
    main.querySelectorAll<HTMLButtonElement>("button.verdict").forEach((btn) => {
      btn.addEventListener("click", () => {
        this.choose(btn.dataset.verdict === VERDICT_CORRECT ? 0 : 1);
      });
    });
  }

  private renderError(message: string): void {
    const doc = this.root.ownerDocument;
    this.root.textContent = "";
    const box = doc.createElement("div");
    box.className = "fatal-error";
    const head = doc.createElement("h2");
    head.textContent = "Cannot load the session";
    const body = doc.createElement("p");
    body.textContent = message;
    box.appendChild(head);
    box.appendChild(body);
    this.root.appendChild(box);
  }

  private showBanner(visible: boolean): void {
    const banner = this.root.querySelector<HTMLElement>("#retry-banner");
    if (banner) {
      banner.hidden = !visible;
    }
  }

  private setControlsEnabled(enabled: boolean): void {
    this.root
      .querySelectorAll<HTMLButtonElement>("button")
      .forEach((btn) => {
        btn.disabled = !enabled;
      });
    const main = this.root.querySelector<HTMLElement>("main");
    main?.classList.toggle("locked", !enabled);
  }
}
