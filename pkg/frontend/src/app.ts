// Fetch/render/submit loop. The server is the source of truth: the client
// never stores responses locally, so a refresh mid-task loses nothing that
// was submitted.

import {
  AnnotationApi,
  Payload,
  PublicTask,
  ServiceUnreachableError,
} from "./api.js";
import { createView, renderVideoPanel, TaskView } from "./views.js";

export class App {
  private readonly api: AnnotationApi;
  private readonly rootEl: HTMLElement;
  private readonly annotatorId: string;
  private view: TaskView | null = null;
  private task: PublicTask | null = null;
  private startedAt = 0;

  constructor(api: AnnotationApi, rootEl: HTMLElement, annotatorId: string) {
    this.api = api;
    this.rootEl = rootEl;
    this.annotatorId = annotatorId;
  }

  async start(): Promise<void> {
    await this.loadNext();
  }

  private clear(): void {
    this.rootEl.textContent = "";
  }

  private banner(message: string, retry: () => void, buttonText = "Retry"): void {
    const bar = document.createElement("div");
    bar.className = "banner";
    const text = document.createElement("span");
    text.textContent = message;
    const button = document.createElement("button");
    button.type = "button";
    button.className = "banner-retry";
    button.textContent = buttonText;
    button.addEventListener("click", () => {
      bar.remove();
      retry();
    });
    bar.appendChild(text);
    bar.appendChild(button);
    this.rootEl.prepend(bar);
  }

  async loadNext(): Promise<void> {
    let reply;
    try {
      reply = await this.api.nextTask(this.annotatorId);
    } catch (err) {
      if (err instanceof ServiceUnreachableError) {
        this.banner("The annotation service is unreachable.", () => void this.loadNext());
        return;
      }
      throw err;
    }
    this.clear();
    if (reply.done || reply.task === null) {
      await this.renderCompletion();
      return;
    }
    this.renderTask(reply.task);
  }

  private async renderCompletion(): Promise<void> {
    const screen = document.createElement("div");
    screen.className = "completion-screen";
    const heading = document.createElement("h2");
    heading.textContent = "All done";
    screen.appendChild(heading);
    try {
      const progress = await this.api.progress(this.annotatorId);
      const line = document.createElement("p");
      line.textContent = `You completed ${progress.completed} of ${progress.total} tasks. Thank you!`;
      screen.appendChild(line);
    } catch {
      // progress is cosmetic on the completion screen
    }
    this.rootEl.appendChild(screen);
  }

  private renderTask(task: PublicTask): void {
    this.task = task;
    this.startedAt = Date.now();
    this.rootEl.appendChild(renderVideoPanel(task));

    const view = createView(task);
    this.view = view;
    this.rootEl.appendChild(view.root);

    const submit = document.createElement("button");
    submit.type = "button";
    submit.className = "submit-button";
    submit.textContent = "Submit";
    submit.disabled = true;
    view.setOnChange(() => {
      submit.disabled = !view.isComplete();
    });
    submit.addEventListener("click", () => void this.submit());
    this.rootEl.appendChild(submit);

    const problem = document.createElement("p");
    problem.className = "validation-message";
    problem.hidden = true;
    this.rootEl.appendChild(problem);
  }

  async submit(): Promise<void> {
    if (!this.task || !this.view) return;
    const payload = this.view.payload();
    if (payload === null) return; // submit stays disabled until complete
    const wallTime = Date.now() - this.startedAt;
    let reply;
    try {
      reply = await this.api.submitResponse(
        this.annotatorId,
        this.task.task_id,
        payload,
        wallTime,
      );
    } catch (err) {
      if (err instanceof ServiceUnreachableError) {
        // input is preserved: the view stays mounted, we only offer resubmit
        this.banner("Could not reach the service; your input is kept.", () => void this.submit(), "Resubmit");
        return;
      }
      throw err;
    }
    if (reply.ok) {
      await this.loadNext();
      return;
    }
    const problem = this.rootEl.querySelector<HTMLElement>(".validation-message");
    if (problem) {
      problem.hidden = false;
      problem.textContent = reply.error ?? `The service rejected the response (${reply.status}).`;
    }
    if (reply.status === 503) {
      this.banner("The response store is unavailable.", () => void this.submit(), "Resubmit");
    }
  }

  /** Test hook: the currently mounted view. */
  currentView(): TaskView | null {
    return this.view;
  }

  currentTask(): PublicTask | null {
    return this.task;
  }
}

export function mount(rootEl: HTMLElement, baseUrl: string, annotatorId: string): App {
  const app = new App(new AnnotationApi(baseUrl), rootEl, annotatorId);
  void app.start();
  return app;
}
