/** Typed client for the annotation service JSON API. */

export type Task = "ranking" | "classification";
export type Label = "yes" | "no" | "ct";

export interface SessionInfo {
  session_id: string;
  task: Task;
  subject: string;
  n_items: number;
  /** Index of the first unanswered item; > 0 when resuming. */
  next: number;
}

export interface RankingItem {
  done: false;
  task: "ranking";
  item_index: number;
  n_items: number;
  texts: string[];
}

export interface ClassificationItem {
  done: false;
  task: "classification";
  item_index: number;
  n_items: number;
  text: string;
}

export interface DoneItem {
  done: true;
  task: Task;
  n_items: number;
}

export type NextItem = RankingItem | ClassificationItem | DoneItem;

export interface Ack {
  ok: true;
  next: number;
  n_items: number;
}

/** Error payloads arrive as {"error": code, "message": text}. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** What the session controller needs; ApiClient is the real implementation. */
export interface AnnotationApi {
  createSession(subject: string, task: Task): Promise<SessionInfo>;
  nextItem(sessionId: string): Promise<NextItem>;
  submit(sessionId: string, itemIndex: number, response: number[] | Label): Promise<Ack>;
}

export class ApiClient implements AnnotationApi {
  private readonly fetchImpl: FetchLike;

  constructor(
    private readonly baseUrl = "",
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((input, init) => globalThis.fetch(input, init));
  }

  createSession(subject: string, task: Task): Promise<SessionInfo> {
    return this.request<SessionInfo>("POST", "/api/sessions", { subject, task });
  }

  nextItem(sessionId: string): Promise<NextItem> {
    return this.request<NextItem>(
      "GET",
      `/api/sessions/${encodeURIComponent(sessionId)}/next`,
    );
  }

  submit(
    sessionId: string,
    itemIndex: number,
    response: number[] | Label,
  ): Promise<Ack> {
    return this.request<Ack>(
      "POST",
      `/api/sessions/${encodeURIComponent(sessionId)}/responses`,
      { item_index: itemIndex, response },
    );
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { Accept: "application/json" };
    const init: RequestInit = { method, headers };
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchImpl(this.baseUrl + path, init);
    const text = await res.text();
    let data: unknown = null;
    try {
      data = JSON.parse(text);
    } catch {
      data = null;
    }
    if (!res.ok) {
      const payload = (data ?? {}) as { error?: string; message?: string };
      throw new ApiError(
        res.status,
        payload.error ?? `http.${res.status}`,
        payload.message ?? text,
      );
    }
    if (data === null) {
      throw new ApiError(res.status, "http.badbody", "response was not JSON");
    }
    return data as T;
  }
}
