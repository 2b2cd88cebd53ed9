/**
 * The author's one-card-at-a-time review queue.
 *
 * Events arrive from the long poll in seq order; each author-visible event
 * becomes exactly one card, oldest first. Submitting a card action issues
 * exactly one API call; a stale_edit conflict swaps the card for an
 * informational one instead of retrying.
 */

import { ApiClient, ApiError } from "./api";
import type { EventRecord } from "./types";

export type CardKind = "edit_review" | "comment" | "task_escalation" | "info";
export type CardAction = "accept" | "reject" | "reply" | "dismiss" | "reopen_task";

export interface CardViewModel {
  card_kind: CardKind;
  headline: string;
  context_lines: string[];
  actions: CardAction[];
  source_ref: string;
  seq: number;
}

export interface CardActionResult {
  status: "done" | "info";
  infoCard?: CardViewModel;
}

export class CardQueue {
  sinceSeq = 0;
  private backlog: EventRecord[] = [];

  constructor(
    private api: ApiClient,
    private docId: string,
  ) {}

  /** Oldest undisplayed author-visible event as a card, or null when empty. */
  async loadNextCard(waitMs = 0): Promise<CardViewModel | null> {
    if (this.backlog.length === 0) {
      const events = await this.api.pollEvents(this.docId, this.sinceSeq, waitMs);
      for (const event of events) {
        this.backlog.push(event);
        this.sinceSeq = Math.max(this.sinceSeq, event.seq);
      }
    }
    const event = this.backlog.shift();
    if (!event) {
      return null;
    }
    return this.toCard(event);
  }

  private async toCard(event: EventRecord): Promise<CardViewModel> {
    if (event.kind === "edit_proposed") {
      const p = event.payload;
      const snapshot = await this.api.getEditContext(this.docId, p.edit_id);
      return {
        card_kind: "edit_review",
        headline: `${p.kind} suggested by ${p.worker_id}`,
        context_lines: snapshot.excerpt,
        actions: ["accept", "reject"],
        source_ref: p.edit_id,
        seq: event.seq,
      };
    }
    if (event.kind === "comment_posted") {
      const p = event.payload;
      return {
        card_kind: "comment",
        headline: `comment from ${p.actor_id}`,
        context_lines: [p.text],
        actions: ["reply", "dismiss"],
        source_ref: p.thread_id,
        seq: event.seq,
      };
    }
    if (event.kind === "task_escalated") {
      const p = event.payload;
      return {
        card_kind: "task_escalation",
        headline: "task skipped by every active worker",
        context_lines: [`task ${p.task_id} needs your call`],
        actions: ["reopen_task", "dismiss"],
        source_ref: p.task_id,
        seq: event.seq,
      };
    }
    // The server only delivers author-visible kinds; anything else is
    // surfaced rather than silently dropped.
    return {
      card_kind: "info",
      headline: `event ${event.kind}`,
      context_lines: [],
      actions: ["dismiss"],
      source_ref: String(event.seq),
      seq: event.seq,
    };
  }

  /**
   * Perform a card action: exactly one API call for accept/reject/reply/
   * reopen_task, none for dismiss. The card may be dismissed only when the
   * result status is "done"; "info" means show the replacement card.
   */
  async submitCardAction(card: CardViewModel, action: CardAction, replyText?: string): Promise<CardActionResult> {
    if (!card.actions.includes(action)) {
      throw new Error(`card does not offer ${action}`);
    }
    if (action === "dismiss") {
      return { status: "done" };
    }
    if (action === "reply") {
      if (!replyText || replyText.trim() === "") {
        throw new Error("reply needs non-empty text");
      }
      await this.api.replyThread(card.source_ref, replyText);
      return { status: "done" };
    }
    if (action === "reopen_task") {
      await this.api.reopenTask(card.source_ref);
      return { status: "done" };
    }
    try {
      await this.api.reviewEdit(this.docId, card.source_ref, action);
      return { status: "done" };
    } catch (err) {
      if (err instanceof ApiError && err.code === "stale_edit") {
        return {
          status: "info",
          infoCard: {
            card_kind: "info",
            headline: "suggestion went stale",
            context_lines: [
              "the document moved on before this edit was reviewed",
              "the worker will need to re-propose it",
            ],
            actions: ["dismiss"],
            source_ref: card.source_ref,
            seq: card.seq,
          },
        };
      }
      throw err;
    }
  }
}
