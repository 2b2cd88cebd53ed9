/**
 * Thin typed client over the documented HTTP API. Both surfaces speak only
 * through this module; the fetch function is injectable so tests can
 * intercept and record every request.
 */

import type {
  ContextSnapshot,
  DocumentView,
  EditSpec,
  EventRecord,
  MetricsRecord,
  ReviewOutcome,
  Role,
  SessionInfo,
  TaskRecord,
  ThumbnailTile,
} from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public code: string,
    public status: number,
    message: string,
  ) {
    super(message || code);
  }
}

export interface ApiConfig {
  baseUrl: string;
  token: string;
  fetchFn?: FetchLike;
}

export class ApiClient {
  private baseUrl: string;
  private token: string;
  private fetchFn: FetchLike;

  constructor(cfg: ApiConfig) {
    this.baseUrl = cfg.baseUrl.replace(/\/$/, "");
    this.token = cfg.token;
    this.fetchFn = cfg.fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = {
      method,
      headers: {
        "content-type": "application/json",
        authorization: `Bearer ${this.token}`,
      },
    };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(this.baseUrl + path, init);
    const data = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      throw new ApiError(data.error ?? "http_error", resp.status, data.message ?? "");
    }
    return data as T;
  }

  static async createSession(
    baseUrl: string,
    actorId: string,
    role: Role,
    docId?: string,
    fetchFn?: FetchLike,
  ): Promise<SessionInfo> {
    const doFetch = fetchFn ?? ((url: string, init?: RequestInit) => fetch(url, init));
    const resp = await doFetch(baseUrl.replace(/\/$/, "") + "/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ actor_id: actorId, role, doc_id: docId }),
    });
    const data = await resp.json();
    if (!resp.ok) {
      throw new ApiError(data.error ?? "http_error", resp.status, data.message ?? "");
    }
    return data as SessionInfo;
  }

  getDocument(docId: string): Promise<DocumentView> {
    return this.call("GET", `/documents/${docId}`);
  }

  createDocument(seedOutline: string, taskTemplates?: object[]): Promise<{ doc_id: string; revision: number }> {
    return this.call("POST", "/documents", { seed_outline: seedOutline, task_templates: taskTemplates ?? [] });
  }

  dictateBlock(
    docId: string,
    payload: { parent_id: string; after_id?: string | null; kind: string; text: string; raw_token?: string },
  ): Promise<{ block_id: string; revision: number }> {
    return this.call("POST", `/documents/${docId}/blocks`, payload);
  }

  setBlockDone(docId: string, blockId: string, done: boolean): Promise<{ revision: number }> {
    return this.call("POST", `/documents/${docId}/blocks/${blockId}/done`, { done });
  }

  proposeEdit(docId: string, submissionId: string, spec: EditSpec): Promise<{ edit_id: string }> {
    return this.call("POST", `/documents/${docId}/edits`, { submission_id: submissionId, spec });
  }

  reviewEdit(docId: string, editId: string, decision: "accept" | "reject"): Promise<ReviewOutcome> {
    return this.call("POST", `/documents/${docId}/edits/${editId}/review`, { decision });
  }

  getEditContext(docId: string, editId: string): Promise<ContextSnapshot> {
    return this.call("GET", `/documents/${docId}/edits/${editId}/context`);
  }

  getThumbnails(docId: string): Promise<ThumbnailTile[]> {
    return this.call("GET", `/documents/${docId}/thumbnails`);
  }

  openThread(docId: string, anchor: string, text: string, rawToken?: string): Promise<{ thread_id: string }> {
    return this.call("POST", `/documents/${docId}/threads`, { anchor, text, raw_token: rawToken });
  }

  replyThread(threadId: string, text: string, rawToken?: string): Promise<{ seq: number }> {
    return this.call("POST", `/threads/${threadId}/replies`, { text, raw_token: rawToken });
  }

  resolveThread(threadId: string): Promise<Record<string, never>> {
    return this.call("POST", `/threads/${threadId}/resolve`, {});
  }

  async nextTask(docId: string, claim?: string): Promise<TaskRecord | null> {
    const query = claim ? `?claim=${encodeURIComponent(claim)}` : "";
    const out = await this.call<TaskRecord | Record<string, never>>("GET", `/documents/${docId}/tasks/next${query}`);
    return out && "id" in out ? (out as TaskRecord) : null;
  }

  skipTask(taskId: string): Promise<object> {
    return this.call("POST", `/tasks/${taskId}/skip`, {});
  }

  completeTask(taskId: string): Promise<object> {
    return this.call("POST", `/tasks/${taskId}/done`, {});
  }

  reopenTask(taskId: string): Promise<object> {
    return this.call("POST", `/tasks/${taskId}/reopen`, {});
  }

  pollEvents(docId: string, since: number, waitMs = 0): Promise<EventRecord[]> {
    return this.call("GET", `/documents/${docId}/events?since=${since}&wait=${waitMs}`);
  }

  getMetrics(docId: string): Promise<MetricsRecord> {
    return this.call("GET", `/documents/${docId}/metrics`);
  }
}
