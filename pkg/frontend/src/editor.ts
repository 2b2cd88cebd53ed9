/**
 * Worker-side editor state: a read-only canonical snapshot plus a list of
 * staged local changes. Local changes never touch the snapshot; a flush
 * posts every staged change as a suggested edit under one submission id,
 * and the snapshot only ever refreshes from the server (driven by events).
 *
 * Network discipline: this module issues nothing beyond GET document,
 * GET events, POST edits, POST threads/replies, and the task endpoints.
 * In particular it cannot review.
 */

import { ApiClient, ApiError } from "./api";
import type { DocumentView, EditSpec, EventRecord, TaskRecord } from "./types";

export interface LocalChange {
  spec: EditSpec;
  label: string;
  status: "staged" | "failed";
  error?: string;
}

export interface FlushResult {
  posted: number;
  failed: number;
}

let submissionCounter = 0;

function nextSubmissionId(actorId: string): string {
  submissionCounter += 1;
  return `${actorId}-save-${submissionCounter}-${Date.now().toString(36)}`;
}

export class WorkerEditor {
  docSnapshot: DocumentView | null = null;
  localChanges: LocalChange[] = [];
  currentTask: TaskRecord | null = null;
  currentSubmission: string;
  sinceSeq = 0;

  constructor(
    private api: ApiClient,
    private docId: string,
    private actorId: string,
  ) {
    this.currentSubmission = nextSubmissionId(actorId);
  }

  async refresh(): Promise<DocumentView> {
    this.docSnapshot = await this.api.getDocument(this.docId);
    return this.docSnapshot;
  }

  /** Stage a typed change locally; the snapshot is left untouched. */
  stage(spec: EditSpec, label: string): LocalChange {
    const change: LocalChange = { spec, label, status: "staged" };
    this.localChanges.push(change);
    return change;
  }

  discard(change: LocalChange): void {
    this.localChanges = this.localChanges.filter((c) => c !== change);
  }

  get canFlush(): boolean {
    return this.localChanges.length > 0;
  }

  /**
   * Post every staged change under the current submission id. Successes
   * leave the list; failures stay local with the error inline. The
   * submission id rotates once the list fully drains.
   */
  async flush(): Promise<FlushResult> {
    if (!this.canFlush) {
      return { posted: 0, failed: 0 };
    }
    let posted = 0;
    const remaining: LocalChange[] = [];
    for (const change of this.localChanges) {
      try {
        await this.api.proposeEdit(this.docId, this.currentSubmission, change.spec);
        posted += 1;
      } catch (err) {
        change.status = "failed";
        change.error = err instanceof ApiError ? err.code : String(err);
        remaining.push(change);
      }
    }
    this.localChanges = remaining;
    if (this.localChanges.length === 0) {
      this.currentSubmission = nextSubmissionId(this.actorId);
    }
    return { posted, failed: remaining.length };
  }

  /**
   * Pull worker-visible events; any review outcome or task movement means
   * the canonical snapshot may have changed, so re-fetch it. Never applies
   * changes locally.
   */
  async pump(waitMs = 0): Promise<EventRecord[]> {
    const events = await this.api.pollEvents(this.docId, this.sinceSeq, waitMs);
    for (const event of events) {
      this.sinceSeq = Math.max(this.sinceSeq, event.seq);
    }
    if (events.some((e) => e.kind === "edit_reviewed")) {
      await this.refresh();
    }
    return events;
  }

  async pullTask(claim?: string): Promise<TaskRecord | null> {
    this.currentTask = await this.api.nextTask(this.docId, claim);
    return this.currentTask;
  }

  async skipCurrentTask(): Promise<void> {
    if (this.currentTask) {
      await this.api.skipTask(this.currentTask.id);
      this.currentTask = null;
    }
  }

  async completeCurrentTask(): Promise<void> {
    if (this.currentTask) {
      await this.api.completeTask(this.currentTask.id);
      this.currentTask = null;
    }
  }

  openThread(anchor: string, text: string): Promise<{ thread_id: string }> {
    return this.api.openThread(this.docId, anchor, text);
  }

  replyThread(threadId: string, text: string): Promise<{ seq: number }> {
    return this.api.replyThread(threadId, text);
  }
}
