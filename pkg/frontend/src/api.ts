// Typed client for the annotation service. The service never sends answer
// keys; everything the client knows about a task is in PublicTask.

export type TaskKind = "selection" | "ranking" | "classification" | "preference";

export interface VideoPanel {
  title: string;
  ocr_text: string;
  subtitle_text: string;
  frame_paths: string[];
  duration_s: number;
  category: string;
}

/** Served option: [label, reserved, text]. The middle slot is always empty. */
export type PublicOption = [string, string, string];

export interface PublicTask {
  task_id: string;
  video_id: string;
  kind: TaskKind;
  video: VideoPanel;
  options: PublicOption[];
  comment_text: string;
  art_dimensions: string[];
}

export type Payload =
  | { label: string }
  | { permutation: string[] }
  | { assignment: Record<string, string> }
  | { scores: Record<string, number> };

export interface NextTaskReply {
  done: boolean;
  task: PublicTask | null;
}

export interface SubmitReply {
  status: number;
  ok: boolean;
  completed?: number;
  error?: string;
}

export interface Progress {
  annotator: string;
  completed: number;
  total: number;
}

export class ServiceUnreachableError extends Error {}

export class AnnotationApi {
  constructor(private readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async nextTask(annotatorId: string): Promise<NextTaskReply> {
    let response: Response;
    try {
      response = await fetch(
        this.url(`/api/tasks/next?annotator=${encodeURIComponent(annotatorId)}`),
      );
    } catch (err) {
      throw new ServiceUnreachableError(String(err));
    }
    if (!response.ok) {
      throw new ServiceUnreachableError(`service replied ${response.status}`);
    }
    return (await response.json()) as NextTaskReply;
  }

  async submitResponse(
    annotatorId: string,
    taskId: string,
    payload: Payload,
    wallTimeMs: number,
    replace = false,
  ): Promise<SubmitReply> {
    let response: Response;
    try {
      response = await fetch(this.url("/api/responses"), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({
          annotator_id: annotatorId,
          task_id: taskId,
          payload,
          wall_time_ms: wallTimeMs,
          replace,
        }),
      });
    } catch (err) {
      throw new ServiceUnreachableError(String(err));
    }
    const body = (await response.json()) as { error?: string; completed?: number };
    return {
      status: response.status,
      ok: response.status === 200,
      completed: body.completed,
      error: body.error,
    };
  }

  async progress(annotatorId: string): Promise<Progress> {
    const response = await fetch(
      this.url(`/api/progress?annotator=${encodeURIComponent(annotatorId)}`),
    );
    return (await response.json()) as Progress;
  }
}
